#include "wecmpc/closed_loop.hpp"

#include "wecmpc/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

namespace wecmpc {
namespace {

using ordered_json = nlohmann::ordered_json;

Vector shift_blocks(const Vector& v, Index block) {
    Vector out(v.size());
    const Index blocks = v.size() / block;
    for (Index b = 0; b < blocks; ++b) {
        const Index o = b * block;
        out.segment(o, block - 1) = v.segment(o + 1, block - 1);
        out[o + block - 1] = v[o + block - 1];
    }
    return out;
}

SolverState warm_start(const SolverGains& gains, const SolverState& state, WarmStart mode) {
    switch (mode) {
        case WarmStart::shift:
            return shift_state(gains, state);
        case WarmStart::hold:
            return state;
        case WarmStart::cold:
            return initial_state(gains);
    }
    return state;
}

ordered_json violations_json(const ViolationLog& v) {
    return ordered_json{{"u", v.u},
                        {"p", v.p},
                        {"v", v.v},
                        {"worst_p_excess", v.worst_p_excess},
                        {"worst_v_excess", v.worst_v_excess}};
}

}  // namespace

std::string to_string(ControllerMode mode) {
    switch (mode) {
        case ControllerMode::single_iteration:
            return "single_iteration";
        case ControllerMode::full_mpc_baseline:
            return "full_mpc_baseline";
        case ControllerMode::converged_iteration:
            return "converged_iteration";
    }
    return "unknown";
}

std::string to_string(WarmStart warm) {
    switch (warm) {
        case WarmStart::shift:
            return "shift";
        case WarmStart::hold:
            return "hold";
        case WarmStart::cold:
            return "cold";
    }
    return "unknown";
}

std::string to_string(WaveSampling sampling) {
    return sampling == WaveSampling::midpoint ? "midpoint" : "start";
}

ControllerMode parse_controller_mode(const std::string& text) {
    for (auto m : {ControllerMode::single_iteration, ControllerMode::full_mpc_baseline,
                   ControllerMode::converged_iteration}) {
        if (to_string(m) == text) {
            return m;
        }
    }
    throw InvalidParameterError("unknown controller mode '" + text + "'");
}

WarmStart parse_warm_start(const std::string& text) {
    for (auto w : {WarmStart::shift, WarmStart::hold, WarmStart::cold}) {
        if (to_string(w) == text) {
            return w;
        }
    }
    throw InvalidParameterError("unknown warm start '" + text + "'");
}

WaveSampling parse_wave_sampling(const std::string& text) {
    for (auto s : {WaveSampling::midpoint, WaveSampling::start}) {
        if (to_string(s) == text) {
            return s;
        }
    }
    throw InvalidParameterError("unknown wave sampling '" + text + "'");
}

void ControllerConfig::validate() const {
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw InvalidParameterError("controller '" + name + "': T must be > 0");
    }
    if (!(T_p > 0.0) || !std::isfinite(T_p)) {
        throw InvalidParameterError("controller '" + name + "': T_p must be > 0");
    }
    if (substeps < 1) {
        throw InvalidParameterError("controller '" + name + "': substeps must be >= 1");
    }
    if (!(measurement_noise >= 0.0)) {
        throw InvalidParameterError("controller '" + name + "': measurement noise must be >= 0");
    }
    if (!(step_safety > 0.0 && step_safety < 1.0)) {
        throw InvalidParameterError("controller '" + name + "': step safety must lie in (0, 1)");
    }
    if (!(converged_tol > 0.0) || converged_max_iter < 1) {
        throw InvalidParameterError("controller '" + name + "': invalid convergence settings");
    }
    bounds.validate();
    (void)horizon();
}

Index ControllerConfig::horizon(std::vector<std::string>* warnings) const {
    const double ratio = T_p / T;
    const double rounded = std::round(ratio);
    if (!(rounded >= 1.0)) {
        throw InvalidParameterError("controller '" + name + "': T_p / T must round to N >= 1");
    }
    if (rounded > static_cast<double>(kMaxHorizon)) {
        throw SizeLimitError("controller '" + name + "': horizon " + format_double(rounded) +
                             " exceeds the size cap");
    }
    if (warnings && std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
        warnings->push_back("controller '" + name + "': T_p / T = " + format_double(ratio) +
                            " is fractional; using N = " + format_double(rounded));
    }
    return static_cast<Index>(rounded);
}

ControllerDesign design_controller(const ContinuousPlant& plant, const ControllerConfig& config) {
    config.validate();
    ControllerDesign d;
    d.config = config;
    const Index N = config.horizon(&d.warnings);
    d.model = zoh_discretize(plant, config.T);
    d.substep = zoh_discretize(plant, config.T / config.substeps);
    d.problem = build_condensed(build_prediction(d.model, N), config.bounds, config.r,
                                config.auto_raise_r);
    if (d.problem.r != d.problem.r_requested) {
        d.warnings.push_back("controller '" + config.name + "': control weight raised from " +
                             format_double(d.problem.r_requested) + " to " +
                             format_double(d.problem.r) + " for convexity");
    }
    if (config.mode != ControllerMode::full_mpc_baseline) {
        GainDesignOptions opts;
        opts.step_safety = config.step_safety;
        d.gains = design_gains(d.problem, opts);
    }
    return d;
}

SolverState shift_state(const SolverGains& gains, const SolverState& state) {
    SolverState out;
    out.xi = project_box(shift_blocks(state.xi, gains.N), gains.lb, gains.ub);
    out.z = shift_blocks(state.z, gains.N);
    return out;
}

double SimulationRecord::peak_input() const noexcept {
    double peak = 0.0;
    for (double x : u) {
        peak = std::max(peak, std::abs(x));
    }
    return peak;
}

std::uint64_t SimulationRecord::flops_per_step() const noexcept {
    return step_flops.empty() ? 0 : step_flops.front();
}

SimulationRecord simulate(const ControllerDesign& design, const WaveForceSignal& wave,
                          const SimulationOptions& options) {
    const ControllerConfig& cfg = design.config;
    const CondensedProblem& problem = design.problem;
    const Index N = design.horizon();
    const Index n = problem.states();
    if (!(options.duration >= 0.0) || !std::isfinite(options.duration)) {
        throw InvalidParameterError("simulate: duration must be finite and >= 0");
    }
    if (cfg.mode != ControllerMode::full_mpc_baseline && !design.gains) {
        throw InvalidParameterError("simulate: iterative controller without designed gains");
    }

    const auto steps = static_cast<std::int64_t>(std::floor(options.duration / cfg.T + 1e-9));
    const int subs = cfg.substeps;
    const double h = cfg.T / subs;

    SimulationRecord rec;
    rec.name = cfg.name;
    rec.mode = cfg.mode;
    rec.T = cfg.T;
    rec.N = N;
    rec.substeps = subs;
    rec.duration = options.duration;
    rec.wave_seed = wave.seed();
    if (design.gains) {
        rec.rho_bound = design.gains->rho_bound;
        rec.asymptotic_rate = design.gains->asymptotic_rate;
    }
    const auto rows = static_cast<std::size_t>(steps) * static_cast<std::size_t>(subs);
    for (auto* series : {&rec.t, &rec.u, &rec.p, &rec.v, &rec.w, &rec.E}) {
        series->reserve(rows);
    }

    Vector x = options.x0.size() == 0 ? Vector::Zero(n) : options.x0;
    if (x.size() != n) {
        throw InvalidParameterError("simulate: initial state has the wrong dimension");
    }

    // Preview grid w(jT), j = 0 .. steps + N - 2.
    const Vector w_grid = wave.sample(0.0, cfg.T, static_cast<Index>(steps) + N);

    std::mt19937_64 noise_rng(cfg.noise_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::optional<SolverState> state;
    if (design.gains) {
        state = initial_state(*design.gains);
    }
    const Bounds& b = cfg.bounds;
    double energy = 0.0;

    for (std::int64_t k = 0; k < steps; ++k) {
        double u = 0.0;
        try {
            Vector x_meas = x;
            if (cfg.measurement_noise > 0.0) {
                for (Index i = 0; i < n; ++i) {
                    x_meas[i] += cfg.measurement_noise * gauss(noise_rng);
                }
            }
            const Vector W = w_grid.segment(static_cast<Index>(k), N);

            switch (cfg.mode) {
                case ControllerMode::single_iteration: {
                    const SolverGains& gains = *design.gains;
                    if (k > 0) {
                        state = warm_start(gains, *state, cfg.warm_start);
                    }
                    u = state->xi[0];
                    FlopCounter counter;
                    const Vector d_til = scaled_offset(gains, x_meas, W, &counter);
                    state = step(gains, *state, d_til, &counter);
                    rec.step_flops.push_back(counter.multiplications);
                    rec.step_iterations.push_back(1);
                    if (cfg.track_kkt) {
                        const KktReport rep = kkt_report(problem, gains, state->xi, state->z,
                                                         compute_offset(problem, x_meas, W));
                        rec.step_stationarity.push_back(rep.stationarity_residual);
                        rec.step_primal.push_back(rep.primal_residual);
                    }
                    break;
                }
                case ControllerMode::converged_iteration: {
                    const SolverGains& gains = *design.gains;
                    const SolverState init =
                        k > 0 ? warm_start(gains, *state, cfg.warm_start) : *state;
                    const ConvergenceResult res = solve_to_convergence(
                        gains, problem, x_meas, W, init, cfg.converged_tol, cfg.converged_max_iter);
                    if (!res.converged) {
                        std::ostringstream msg;
                        msg << "iteration did not converge at step " << k << " (increment "
                            << res.last_increment << " after " << res.iterations << " steps)";
                        throw NumericError(msg.str());
                    }
                    state = res.state;
                    u = state->xi[0];
                    rec.step_iterations.push_back(res.iterations);
                    if (cfg.track_kkt) {
                        rec.step_stationarity.push_back(res.kkt.stationarity_residual);
                        rec.step_primal.push_back(res.kkt.primal_residual);
                    }
                    break;
                }
                case ControllerMode::full_mpc_baseline: {
                    const QpSolution sol = solve_qp(eliminate_to_reduced(problem, x_meas, W), cfg.qp);
                    if (sol.status != QpStatus::solved) {
                        std::ostringstream msg;
                        msg << "QP " << to_string(sol.status) << " at step " << k
                            << " (primal residual " << sol.primal_residual << ", dual residual "
                            << sol.dual_residual << ", " << sol.iterations << " iterations)";
                        throw NumericError(msg.str());
                    }
                    u = sol.u_opt[0];
                    rec.step_iterations.push_back(sol.iterations);
                    break;
                }
            }
            if (!std::isfinite(u)) {
                throw NumericError("non-finite control input at step " + std::to_string(k));
            }
        } catch (const Error& e) {
            rec.aborted = true;
            rec.abort_reason = e.what();
            break;
        }

        if (u < b.u_lower || u > b.u_upper) {
            ++rec.violations.u;
        }

        for (int j = 0; j < subs; ++j) {
            const std::int64_t idx = k * subs + j;
            const double t = static_cast<double>(idx) * h;
            const double tw = cfg.wave_sampling == WaveSampling::midpoint ? t + 0.5 * h : t;
            const double wj = wave(tw);
            const double p = design.substep.Cp.dot(x);
            const double v = design.substep.Cv.dot(x);

            if (p > b.p_upper || p < b.p_lower) {
                ++rec.violations.p;
                rec.violations.worst_p_excess =
                    std::max(rec.violations.worst_p_excess, std::max(p - b.p_upper, b.p_lower - p));
            }
            if (v > b.v_upper || v < b.v_lower) {
                ++rec.violations.v;
                rec.violations.worst_v_excess =
                    std::max(rec.violations.worst_v_excess, std::max(v - b.v_upper, b.v_lower - v));
            }

            energy -= u * v * h;
            rec.t.push_back(t);
            rec.u.push_back(u);
            rec.p.push_back(p);
            rec.v.push_back(v);
            rec.w.push_back(wj);
            rec.E.push_back(energy);
            if (cfg.record_states) {
                rec.x.push_back(x);
            }

            x = design.substep.A * x + design.substep.B * (u + wj);
        }
        if (!x.allFinite()) {
            rec.aborted = true;
            rec.abort_reason = "non-finite plant state at step " + std::to_string(k);
            break;
        }
    }
    return rec;
}

SimulationRecord run_single_iteration_mpc(const ContinuousPlant& plant, const WaveForceSignal& wave,
                                          const ControllerConfig& config, double duration) {
    ControllerConfig cfg = config;
    cfg.mode = ControllerMode::single_iteration;
    return simulate(design_controller(plant, cfg), wave, SimulationOptions{duration, {}});
}

SimulationRecord run_baseline_mpc(const ContinuousPlant& plant, const WaveForceSignal& wave,
                                  const ControllerConfig& config, double duration) {
    ControllerConfig cfg = config;
    cfg.mode = ControllerMode::full_mpc_baseline;
    return simulate(design_controller(plant, cfg), wave, SimulationOptions{duration, {}});
}

double relative_improvement(double energy_a, double energy_b) {
    if (energy_b == 0.0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return (energy_a - energy_b) / energy_b;
}

ComparisonReport compare_runs(const std::vector<const SimulationRecord*>& records) {
    if (records.empty()) {
        throw ComparisonError("compare_runs: no records");
    }
    for (const auto* r : records) {
        if (r == nullptr) {
            throw ComparisonError("compare_runs: null record");
        }
    }
    ComparisonReport rep;
    rep.duration = records.front()->duration;
    rep.wave_seed = records.front()->wave_seed;
    for (const auto* r : records) {
        if (r->duration != rep.duration) {
            throw ComparisonError("compare_runs: record '" + r->name + "' has duration " +
                                  format_double(r->duration) + ", expected " +
                                  format_double(rep.duration));
        }
        if (r->wave_seed != rep.wave_seed) {
            throw ComparisonError("compare_runs: record '" + r->name +
                                  "' uses a different wave seed");
        }
        rep.entries.push_back(ComparisonEntry{r->name, r->mode, r->T, r->N, r->final_energy(),
                                              r->peak_input(), r->violations,
                                              r->flops_per_step()});
    }
    const std::size_t m = rep.entries.size();
    rep.improvement.assign(m, std::vector<double>(m, 0.0));
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t c = 0; c < m; ++c) {
            rep.improvement[a][c] =
                relative_improvement(rep.entries[a].final_energy, rep.entries[c].final_energy);
        }
    }
    return rep;
}

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

void write_record_csv(const SimulationRecord& record, std::ostream& out) {
    out << "t,u,p,v,w,E\n";
    std::string line;
    for (std::size_t i = 0; i < record.t.size(); ++i) {
        line.clear();
        for (const auto* series : {&record.t, &record.u, &record.p, &record.v, &record.w}) {
            line += format_double((*series)[i]);
            line += ',';
        }
        line += format_double(record.E[i]);
        line += '\n';
        out << line;
    }
}

void write_record_csv(const SimulationRecord& record, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot open '" + path + "' for writing");
    }
    write_record_csv(record, out);
    if (!out) {
        throw Error("failed writing '" + path + "'");
    }
}

std::string record_summary_json(const SimulationRecord& record) {
    ordered_json j;
    j["name"] = record.name;
    j["mode"] = to_string(record.mode);
    j["T"] = record.T;
    j["N"] = record.N;
    j["substeps"] = record.substeps;
    j["duration"] = record.duration;
    j["wave_seed"] = record.wave_seed;
    j["rows"] = record.t.size();
    j["final_energy"] = record.final_energy();
    j["peak_input"] = record.peak_input();
    j["flops_per_step"] = record.flops_per_step();
    j["rho_bound"] = record.rho_bound;
    j["asymptotic_rate"] = record.asymptotic_rate;
    j["violations"] = violations_json(record.violations);
    j["aborted"] = record.aborted;
    j["abort_reason"] = record.abort_reason;
    return j.dump(2) + "\n";
}

std::string comparison_json(const ComparisonReport& report) {
    ordered_json j;
    j["duration"] = report.duration;
    j["wave_seed"] = report.wave_seed;
    ordered_json entries = ordered_json::array();
    for (const auto& e : report.entries) {
        entries.push_back(ordered_json{{"name", e.name},
                                       {"mode", to_string(e.mode)},
                                       {"T", e.T},
                                       {"N", e.N},
                                       {"final_energy", e.final_energy},
                                       {"peak_input", e.peak_input},
                                       {"flops_per_step", e.flops_per_step},
                                       {"violations", violations_json(e.violations)}});
    }
    j["entries"] = entries;
    ordered_json imp = ordered_json::array();
    for (std::size_t a = 0; a < report.entries.size(); ++a) {
        for (std::size_t c = 0; c < report.entries.size(); ++c) {
            if (a == c) {
                continue;
            }
            const double val = report.improvement[a][c];
            imp.push_back(ordered_json{{"a", report.entries[a].name},
                                       {"b", report.entries[c].name},
                                       {"relative_improvement",
                                        std::isfinite(val) ? ordered_json(val) : ordered_json()}});
        }
    }
    j["improvements"] = imp;
    return j.dump(2) + "\n";
}

}  // namespace wecmpc
