#include "wecmpc/experiment.hpp"

#include "wecmpc/errors.hpp"
#include "wecmpc/flops.hpp"
#include "wecmpc/proj_fl_cmo.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

namespace wecmpc {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// Reads an object field by field and rejects keys nobody asked for.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ConfigError(path_ + ": expected an object");
        }
    }

    const json* find(const char* key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void get(const char* key, double& out) {
        if (const json* v = find(key)) {
            if (!v->is_number()) {
                throw ConfigError(where(key) + ": expected a number");
            }
            out = v->get<double>();
        }
    }
    void get(const char* key, int& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_integer()) {
                throw ConfigError(where(key) + ": expected an integer");
            }
            const auto x = v->get<std::int64_t>();
            if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
                throw ConfigError(where(key) + ": integer out of range");
            }
            out = static_cast<int>(x);
        }
    }
    void get(const char* key, std::uint64_t& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_unsigned()) {
                throw ConfigError(where(key) + ": expected a non-negative integer");
            }
            out = v->get<std::uint64_t>();
        }
    }
    void get(const char* key, bool& out) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) {
                throw ConfigError(where(key) + ": expected true or false");
            }
            out = v->get<bool>();
        }
    }
    void get(const char* key, std::string& out) {
        if (const json* v = find(key)) {
            if (!v->is_string()) {
                throw ConfigError(where(key) + ": expected a string");
            }
            out = v->get<std::string>();
        }
    }
    void get(const char* key, std::vector<double>& out) {
        if (const json* v = find(key)) {
            if (!v->is_array()) {
                throw ConfigError(where(key) + ": expected an array of numbers");
            }
            out.clear();
            for (const auto& e : *v) {
                if (!e.is_number()) {
                    throw ConfigError(where(key) + ": expected an array of numbers");
                }
                out.push_back(e.get<double>());
            }
        }
    }
    void get_pair(const char* key, double& lo, double& hi) {
        if (const json* v = find(key)) {
            if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number()) {
                throw ConfigError(where(key) + ": expected [lower, upper]");
            }
            lo = (*v)[0].get<double>();
            hi = (*v)[1].get<double>();
        }
    }

    [[nodiscard]] std::string where(const char* key) const { return path_ + "." + key; }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (!seen_.count(item.key())) {
                throw ConfigError(path_ + ": unknown key '" + item.key() + "'");
            }
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

QpOptions parse_qp(const json& j, const std::string& path) {
    QpOptions q;
    ObjectReader r(j, path);
    r.get("tol", q.tol);
    r.get("max_iter", q.max_iter);
    r.get("rho", q.rho);
    r.get("sigma", q.sigma);
    r.get("alpha", q.alpha);
    r.get("adaptive_rho", q.adaptive_rho);
    r.get("polish", q.polish);
    r.get("check_interval", q.check_interval);
    r.finish();
    return q;
}

ControllerConfig parse_controller(const json& j, const std::string& path) {
    ControllerConfig c;
    ObjectReader r(j, path);
    r.get("name", c.name);
    std::string text;
    if (r.find("mode")) {
        r.get("mode", text);
        try {
            c.mode = parse_controller_mode(text);
        } catch (const Error& e) {
            throw ConfigError(r.where("mode") + ": " + e.what());
        }
    }
    r.get("T", c.T);
    r.get("T_p", c.T_p);
    if (r.find("warm_start")) {
        r.get("warm_start", text);
        try {
            c.warm_start = parse_warm_start(text);
        } catch (const Error& e) {
            throw ConfigError(r.where("warm_start") + ": " + e.what());
        }
    }
    if (const json* b = r.find("bounds")) {
        ObjectReader br(*b, r.where("bounds"));
        br.get_pair("u", c.bounds.u_lower, c.bounds.u_upper);
        br.get_pair("p", c.bounds.p_lower, c.bounds.p_upper);
        br.get_pair("v", c.bounds.v_lower, c.bounds.v_upper);
        br.finish();
    }
    r.get("r", c.r);
    r.get("auto_raise_r", c.auto_raise_r);
    r.get("substeps", c.substeps);
    if (r.find("wave_sampling")) {
        r.get("wave_sampling", text);
        try {
            c.wave_sampling = parse_wave_sampling(text);
        } catch (const Error& e) {
            throw ConfigError(r.where("wave_sampling") + ": " + e.what());
        }
    }
    r.get("measurement_noise", c.measurement_noise);
    r.get("noise_seed", c.noise_seed);
    r.get("step_safety", c.step_safety);
    if (const json* q = r.find("qp")) {
        c.qp = parse_qp(*q, r.where("qp"));
    }
    r.get("converged_tol", c.converged_tol);
    r.get("converged_max_iter", c.converged_max_iter);
    r.get("track_kkt", c.track_kkt);
    r.get("record_states", c.record_states);
    r.finish();
    return c;
}

ordered_json controller_json(const ControllerConfig& c) {
    const auto& b = c.bounds;
    return ordered_json{
        {"name", c.name},
        {"mode", to_string(c.mode)},
        {"T", c.T},
        {"T_p", c.T_p},
        {"warm_start", to_string(c.warm_start)},
        {"bounds",
         {{"u", {b.u_lower, b.u_upper}}, {"p", {b.p_lower, b.p_upper}}, {"v", {b.v_lower, b.v_upper}}}},
        {"r", c.r},
        {"auto_raise_r", c.auto_raise_r},
        {"substeps", c.substeps},
        {"wave_sampling", to_string(c.wave_sampling)},
        {"measurement_noise", c.measurement_noise},
        {"noise_seed", c.noise_seed},
        {"step_safety", c.step_safety},
        {"qp",
         {{"tol", c.qp.tol},
          {"max_iter", c.qp.max_iter},
          {"rho", c.qp.rho},
          {"sigma", c.qp.sigma},
          {"alpha", c.qp.alpha},
          {"adaptive_rho", c.qp.adaptive_rho},
          {"polish", c.qp.polish},
          {"check_interval", c.qp.check_interval}}},
        {"converged_tol", c.converged_tol},
        {"converged_max_iter", c.converged_max_iter},
        {"track_kkt", c.track_kkt},
        {"record_states", c.record_states},
    };
}

bool valid_name(const std::string& name) {
    if (name.empty()) {
        return false;
    }
    return std::all_of(name.begin(), name.end(), [](char ch) {
        return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.';
    });
}

std::string shortest(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::string fixed(double value, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << value;
    return os.str();
}

std::string scientific(double value, int digits) {
    std::ostringstream os;
    os << std::scientific << std::setprecision(digits) << value;
    return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot open '" + path.string() + "' for writing");
    }
    out << text;
    if (!out) {
        throw Error("failed writing '" + path.string() + "'");
    }
}

fs::path prepare_dir(const std::string& dir) {
    const fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) {
        throw Error("cannot create output directory '" + dir + "': " + ec.message());
    }
    return p;
}

unsigned worker_count(const ExperimentConfig& config, std::size_t jobs) {
    unsigned n = config.threads > 0 ? static_cast<unsigned>(config.threads)
                                    : std::max(1U, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

SimulationBatch run_batch(const ExperimentConfig& config, const std::vector<ControllerConfig>& controllers,
                          const std::string& out_dir) {
    const ContinuousPlant plant = config.plant.build();
    const WaveForceSignal wave = synthesize_wave_force(config.wave_spec());

    SimulationBatch batch;
    std::vector<ControllerDesign> designs;
    designs.reserve(controllers.size());
    for (const auto& c : controllers) {
        designs.push_back(design_controller(plant, c));
        for (const auto& w : designs.back().warnings) {
            batch.output.warnings.push_back(w);
        }
    }

    batch.records.resize(designs.size());
    const unsigned workers = worker_count(config, designs.size());
    const SimulationOptions opts{config.duration, {}};
    for (std::size_t first = 0; first < designs.size(); first += workers) {
        const std::size_t last = std::min(designs.size(), first + workers);
        std::vector<std::future<SimulationRecord>> jobs;
        for (std::size_t i = first; i < last; ++i) {
            jobs.push_back(std::async(std::launch::async,
                                      [&, i] { return simulate(designs[i], wave, opts); }));
        }
        for (std::size_t i = first; i < last; ++i) {
            batch.records[i] = jobs[i - first].get();
        }
    }

    const fs::path dir = prepare_dir(out_dir);
    std::vector<const SimulationRecord*> ptrs;
    for (const auto& rec : batch.records) {
        const fs::path csv = dir / (rec.name + ".csv");
        const fs::path sum = dir / (rec.name + ".json");
        write_record_csv(rec, csv.string());
        write_text(sum, record_summary_json(rec));
        batch.output.files.push_back(csv.string());
        batch.output.files.push_back(sum.string());
        ptrs.push_back(&rec);
    }
    batch.comparison = compare_runs(ptrs);
    batch.output.json = comparison_json(batch.comparison);
    const fs::path cmp = dir / "comparison.json";
    write_text(cmp, batch.output.json);
    batch.output.files.push_back(cmp.string());

    std::ostringstream text;
    text << "controller                        T [s]      N    energy [J]   peak |u|   u/p/v violations   flops/step\n";
    for (const auto& e : batch.comparison.entries) {
        text << std::left << std::setw(30) << e.name << std::right << std::setw(10) << shortest(e.T)
             << std::setw(7) << e.N << std::setw(14) << fixed(e.final_energy, 4) << std::setw(11)
             << fixed(e.peak_input, 4) << std::setw(9) << e.violations.u << "/" << e.violations.p
             << "/" << e.violations.v << std::setw(13) << e.flops_per_step << "\n";
    }
    batch.output.text = text.str();

    for (const auto& rec : batch.records) {
        if (rec.aborted) {
            throw NumericError("simulation '" + rec.name + "' aborted: " + rec.abort_reason);
        }
    }
    return batch;
}

}  // namespace

ContinuousPlant PlantConfig::build() const {
    return make_benchmark_plant(mass, stiffness, damping, radiation);
}

WaveSpec ExperimentConfig::wave_spec() const {
    WaveSpec w = wave;
    w.seed = seed;
    return w;
}

void ExperimentConfig::validate() const {
    try {
        const ContinuousPlant p = plant.build();
        (void)p;
        wave_spec().validate();
        if (controllers.empty()) {
            throw ConfigError("controllers: at least one controller is required");
        }
        std::set<std::string> names;
        for (const auto& c : controllers) {
            if (!valid_name(c.name)) {
                throw ConfigError("controllers: name '" + c.name +
                                  "' must be non-empty and use only [A-Za-z0-9_.-]");
            }
            if (!names.insert(c.name).second) {
                throw ConfigError("controllers: duplicate name '" + c.name + "'");
            }
            c.validate();
        }
        if (!(duration >= 0.0) || !std::isfinite(duration)) {
            throw ConfigError("duration: must be finite and >= 0");
        }
        if (output_dir.empty()) {
            throw ConfigError("output_dir: must not be empty");
        }
        cost.validate();
        for (double T : benchmark_periods) {
            if (!(T > 0.0) || !std::isfinite(T)) {
                throw ConfigError("benchmark_periods: entries must be > 0");
            }
        }
        if (threads < 0) {
            throw ConfigError("threads: must be >= 0");
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }

    ExperimentConfig c;
    c.controllers.clear();
    ObjectReader r(j, "config");
    if (const json* p = r.find("plant")) {
        ObjectReader pr(*p, "plant");
        pr.get("mass", c.plant.mass);
        pr.get("stiffness", c.plant.stiffness);
        pr.get("damping", c.plant.damping);
        if (const json* rad = pr.find("radiation")) {
            if (rad->is_null()) {
                c.plant.radiation.reset();
            } else {
                RadiationLag lag = c.plant.radiation.value_or(RadiationLag{});
                ObjectReader rr(*rad, "plant.radiation");
                rr.get("gain", lag.gain);
                rr.get("pole", lag.pole);
                rr.finish();
                c.plant.radiation = lag;
            }
        }
        pr.finish();
    }
    if (const json* w = r.find("wave")) {
        ObjectReader wr(*w, "wave");
        wr.get("significant_height", c.wave.significant_height);
        wr.get("typical_period", c.wave.typical_period);
        wr.get("peak_enhancement", c.wave.peak_enhancement);
        wr.get("n_harmonics", c.wave.n_harmonics);
        wr.get("omega_min", c.wave.omega_min);
        wr.get("omega_max", c.wave.omega_max);
        wr.get("excitation_gain", c.wave.excitation_gain);
        wr.finish();
    }
    if (const json* list = r.find("controllers")) {
        if (!list->is_array()) {
            throw ConfigError("controllers: expected an array");
        }
        for (std::size_t i = 0; i < list->size(); ++i) {
            c.controllers.push_back(
                parse_controller((*list)[i], "controllers[" + std::to_string(i) + "]"));
        }
    }
    r.get("duration", c.duration);
    r.get("seed", c.seed);
    r.get("output_dir", c.output_dir);
    if (const json* cost = r.find("cost")) {
        ObjectReader cr(*cost, "cost");
        cr.get("n_i", c.cost.n_i);
        cr.get("T_p", c.cost.T_p);
        cr.get("OP", c.cost.OP);
        cr.get("kappa", c.cost.kappa);
        cr.get("epsilon", c.cost.epsilon);
        cr.finish();
    }
    r.get("benchmark_periods", c.benchmark_periods);
    r.get("threads", c.threads);
    r.finish();
    c.wave.seed = c.seed;
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read config file '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
    ordered_json j;
    ordered_json plant{{"mass", c.plant.mass},
                       {"stiffness", c.plant.stiffness},
                       {"damping", c.plant.damping}};
    if (c.plant.radiation) {
        plant["radiation"] = {{"gain", c.plant.radiation->gain}, {"pole", c.plant.radiation->pole}};
    } else {
        plant["radiation"] = nullptr;
    }
    j["plant"] = plant;
    j["wave"] = {{"significant_height", c.wave.significant_height},
                 {"typical_period", c.wave.typical_period},
                 {"peak_enhancement", c.wave.peak_enhancement},
                 {"n_harmonics", c.wave.n_harmonics},
                 {"omega_min", c.wave.omega_min},
                 {"omega_max", c.wave.omega_max},
                 {"excitation_gain", c.wave.excitation_gain}};
    ordered_json list = ordered_json::array();
    for (const auto& ctl : c.controllers) {
        list.push_back(controller_json(ctl));
    }
    j["controllers"] = list;
    j["duration"] = c.duration;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["cost"] = {{"n_i", c.cost.n_i},
                 {"T_p", c.cost.T_p},
                 {"OP", c.cost.OP},
                 {"kappa", c.cost.kappa},
                 {"epsilon", c.cost.epsilon}};
    j["benchmark_periods"] = c.benchmark_periods;
    j["threads"] = c.threads;
    return j.dump(2) + "\n";
}

ExperimentConfig default_config() {
    ExperimentConfig c;
    Bounds b;
    b.u_lower = -11.0;
    b.u_upper = 11.0;
    b.p_lower = -1.0;
    b.p_upper = 1.0;
    b.v_lower = -3.0;
    b.v_upper = 3.0;

    ControllerConfig base;
    base.T_p = 0.2;
    base.r = 0.1;
    base.bounds = b;

    ControllerConfig b50 = base;
    b50.name = "baseline_50ms";
    b50.mode = ControllerMode::full_mpc_baseline;
    b50.T = 0.05;
    ControllerConfig b20 = b50;
    b20.name = "baseline_20ms";
    b20.T = 0.02;
    ControllerConfig si = base;
    si.name = "single_iteration_1ms";
    si.mode = ControllerMode::single_iteration;
    si.T = 0.001;

    c.controllers = {b50, b20, si};
    c.output_dir = "out";
    c.cost = IpmCostModel{10.0, 2.0, 1e11, 1.0, 1e-6};
    return c;
}

ExperimentConfig paper_cost_config() {
    ExperimentConfig c = default_config();
    for (auto& ctl : c.controllers) {
        ctl.T_p = 2.0;
    }
    c.output_dir = "out_cost";
    return c;
}

CommandOutput cmd_design(const ExperimentConfig& config, const std::optional<std::string>& out_dir) {
    config.validate();
    const ContinuousPlant plant = config.plant.build();
    CommandOutput out;
    ordered_json reports = ordered_json::array();
    std::ostringstream text;
    text << "controller                      N        kp           ki           tau          "
            "rho_bound   rate        convexity\n";
    for (const auto& c0 : config.controllers) {
        ControllerConfig c = c0;
        const bool gains_used = c.mode != ControllerMode::full_mpc_baseline;
        if (!gains_used) {
            c.mode = ControllerMode::single_iteration;
        }
        const ControllerDesign d = design_controller(plant, c);
        for (const auto& w : d.warnings) {
            out.warnings.push_back(w);
        }
        const SolverGains& g = *d.gains;
        const auto N = d.horizon();
        const auto n = d.problem.states();
        auto dims = [](Index r, Index k) { return ordered_json::array({r, k}); };
        reports.push_back(ordered_json{
            {"name", c0.name},
            {"mode", to_string(c0.mode)},
            {"gains_used_by_controller", gains_used},
            {"T", c0.T},
            {"N", N},
            {"n", n},
            {"r", d.problem.r},
            {"r_requested", d.problem.r_requested},
            {"convexity_margin", d.problem.convexity_margin()},
            {"kp", g.kp},
            {"ki", g.ki},
            {"tau", g.tau},
            {"zero_dynamics_norm", g.zero_dynamics_norm},
            {"transformed_norm", g.transformed_norm},
            {"rho_bound", g.rho_bound},
            {"rho_transformed", g.rho_transformed},
            {"asymptotic_rate", g.asymptotic_rate},
            {"contraction_certified", g.rho_bound < 1.0},
            {"sizes",
             {{"G1", dims(g.G1.rows(), g.G1.cols())},
              {"G2", dims(g.G2.rows(), g.G2.cols())},
              {"G3", dims(g.G3.rows(), g.G3.cols())},
              {"G4", dims(g.G4.rows(), g.G4.cols())},
              {"g", dims(g.g.size(), 1)},
              {"Dtil", dims(g.Dtil.rows(), g.Dtil.cols())}}},
            {"warnings", d.warnings},
        });
        text << std::left << std::setw(28) << c0.name << std::right << std::setw(5) << N << "  "
             << scientific(g.kp, 4) << "  " << scientific(g.ki, 4) << "  " << scientific(g.tau, 4)
             << "  " << fixed(g.rho_bound, 6) << "  " << fixed(g.asymptotic_rate, 6) << "  "
             << scientific(d.problem.convexity_margin(), 3) << "\n";
    }
    text << "rho_bound is the Euclidean Lipschitz constant of one step; rate is the spectral "
            "radius of its linear part.\n";
    ordered_json j{{"controllers", reports}};
    out.json = j.dump(2) + "\n";
    out.text = text.str();
    if (out_dir) {
        const fs::path p = prepare_dir(*out_dir) / "design.json";
        write_text(p, out.json);
        out.files.push_back(p.string());
    }
    return out;
}

SimulationBatch cmd_simulate(const ExperimentConfig& config, const std::string& out_dir) {
    config.validate();
    return run_batch(config, config.controllers, out_dir);
}

SimulationBatch cmd_benchmark(const ExperimentConfig& config, const std::string& out_dir) {
    config.validate();
    std::vector<ControllerConfig> matrix;
    for (const auto& c : config.controllers) {
        for (double T : config.benchmark_periods) {
            ControllerConfig v = c;
            v.T = T;
            v.name = c.name + "_T" + shortest(T * 1000.0) + "ms";
            matrix.push_back(v);
        }
    }
    return run_batch(config, matrix, out_dir);
}

CommandOutput cmd_flops(const ExperimentConfig& config, const std::optional<std::string>& out_dir) {
    config.validate();
    const Index n = config.plant.build().states();
    const IpmCostModel& cost = config.cost;
    const double t_rt = rt_min_period(cost.T_p, cost.OP);
    const double t_ipm = ipm_min_period(cost);

    CommandOutput out;
    std::ostringstream text;
    text << "OP = " << scientific(cost.OP, 3) << " FLOP/s, T_p = " << shortest(cost.T_p)
         << " s, n_i = " << shortest(cost.n_i) << "\n\n";
    text << "controller                      T [s]      N       offset        G1_xi         G2_z"
            "          G3_d          G4_xi         total         step [s]\n";

    ordered_json rows = ordered_json::array();
    for (const auto& c : config.controllers) {
        std::vector<std::string> warnings;
        const Index N = c.horizon(&warnings);
        for (const auto& w : warnings) {
            out.warnings.push_back(w);
        }
        const FlopLedger ledger = count_step_flops(N, n);
        ordered_json entries;
        text << std::left << std::setw(28) << c.name << std::right << std::setw(9) << shortest(c.T)
             << std::setw(7) << N;
        for (const auto& e : ledger.entries) {
            entries[e.name] = e.multiplications;
            text << std::setw(14) << e.multiplications;
        }
        const double step_time = static_cast<double>(ledger.total()) / cost.OP;
        text << std::setw(14) << ledger.total() << "  " << scientific(step_time, 3) << "\n";
        rows.push_back(ordered_json{{"name", c.name},
                                    {"T", c.T},
                                    {"N", N},
                                    {"n", n},
                                    {"entries", entries},
                                    {"total", ledger.total()},
                                    {"step_time", step_time},
                                    {"fits_in_period", step_time <= c.T},
                                    {"ipm_delay", ipm_delay(cost, N)}});
    }

    ordered_json sweep = ordered_json::array();
    for (double scale : {0.01, 0.1, 1.0, 10.0, 100.0}) {
        IpmCostModel m = cost;
        m.OP = cost.OP * scale;
        sweep.push_back(ordered_json{{"OP", m.OP},
                                     {"rt_min_period", rt_min_period(cost.T_p, m.OP)},
                                     {"ipm_min_period", ipm_min_period(m)}});
    }

    text << "\nreal-time single-iteration period  (25 T_p^2 / OP)^(1/3)   = "
         << fixed(t_rt * 1e3, 4) << " ms\n";
    text << "interior-point period              (50 n_i T_p^3 / OP)^(1/4) = "
         << fixed(t_ipm * 1e3, 4) << " ms\n";
    text << "  note: the published value for this setup is " << fixed(kReportedIpmMinPeriod * 1e3, 1)
         << " ms, which the formula does not reproduce (ratio "
         << fixed(kReportedIpmMinPeriod / t_ipm, 4) << ")\n";

    ordered_json j;
    j["OP"] = cost.OP;
    j["T_p"] = cost.T_p;
    j["n_i"] = cost.n_i;
    j["controllers"] = rows;
    j["rt_min_period"] = t_rt;
    j["ipm_min_period"] = t_ipm;
    j["ipm_min_period_reported"] = kReportedIpmMinPeriod;
    j["ipm_min_period_discrepancy"] = ordered_json{
        {"formula", t_ipm},
        {"reported", kReportedIpmMinPeriod},
        {"relative_difference", (kReportedIpmMinPeriod - t_ipm) / t_ipm},
        {"flagged", std::abs(kReportedIpmMinPeriod - t_ipm) > 1e-3}};
    j["op_sweep"] = sweep;
    out.json = j.dump(2) + "\n";
    out.text = text.str();
    if (out_dir) {
        const fs::path p = prepare_dir(*out_dir) / "flops.json";
        write_text(p, out.json);
        out.files.push_back(p.string());
    }
    return out;
}

int exit_code_for(const std::exception& error) noexcept {
    if (dynamic_cast<const ConfigError*>(&error) || dynamic_cast<const InvalidParameterError*>(&error) ||
        dynamic_cast<const InvalidModelError*>(&error) || dynamic_cast<const SizeLimitError*>(&error)) {
        return kExitConfig;
    }
    if (dynamic_cast<const ConvexityError*>(&error) || dynamic_cast<const DesignError*>(&error) ||
        dynamic_cast<const RankError*>(&error)) {
        return kExitDesign;
    }
    return kExitRuntime;
}

}  // namespace wecmpc
