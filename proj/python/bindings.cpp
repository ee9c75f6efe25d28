#include "wecmpc/closed_loop.hpp"
#include "wecmpc/errors.hpp"
#include "wecmpc/experiment.hpp"
#include "wecmpc/flops.hpp"
#include "wecmpc/proj_fl_cmo.hpp"
#include "wecmpc/qp_oracle.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

namespace py = pybind11;
using namespace wecmpc;

namespace {

ExperimentConfig config_from(const std::string& json_text) {
    return json_text.empty() ? default_config() : parse_config(json_text);
}

template <typename T>
py::array_t<T> to_array(const std::vector<T>& v) {
    return py::array_t<T>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::dict qp_dict(const QpSolution& s) {
    py::dict d;
    d["status"] = to_string(s.status);
    d["u"] = s.u_opt;
    d["cost"] = s.cost;
    d["iterations"] = s.iterations;
    d["primal_residual"] = s.primal_residual;
    d["dual_residual"] = s.dual_residual;
    d["bound_duals"] = s.bound_duals;
    d["ineq_duals"] = s.ineq_duals;
    return d;
}

class Controller {
public:
    Controller(const std::string& config_json, const std::string& name) : experiment_(config_from(config_json)) {
        experiment_.validate();
        const ControllerConfig* chosen = nullptr;
        for (const auto& c : experiment_.controllers) {
            if (name.empty() || c.name == name) {
                chosen = &c;
                break;
            }
        }
        if (chosen == nullptr) {
            throw ConfigError("no controller named '" + name + "'");
        }
        ControllerConfig c = *chosen;
        mode_ = c.mode;
        if (c.mode == ControllerMode::full_mpc_baseline) {
            c.mode = ControllerMode::single_iteration;  // gains are still useful to inspect
        }
        design_.emplace(design_controller(experiment_.plant.build(), c));
        design_->config.mode = mode_;
    }

    [[nodiscard]] const ControllerDesign& design() const { return *design_; }
    [[nodiscard]] const SolverGains& gains() const { return *design_->gains; }

    py::dict gain_summary() const {
        const SolverGains& g = gains();
        py::dict d;
        d["kp"] = g.kp;
        d["ki"] = g.ki;
        d["tau"] = g.tau;
        d["rho_bound"] = g.rho_bound;
        d["asymptotic_rate"] = g.asymptotic_rate;
        d["zero_dynamics_norm"] = g.zero_dynamics_norm;
        d["r"] = design_->problem.r;
        return d;
    }

    py::dict solve_qp_at(const Vector& x, const Vector& W) const {
        return qp_dict(solve_qp(eliminate_to_reduced(design_->problem, x, W), design_->config.qp));
    }

    py::dict converge(const Vector& x, const Vector& W, double tol, int max_iter) const {
        const ConvergenceResult r = solve_to_convergence(gains(), design_->problem, x, W, initial_state(gains()), tol, max_iter);
        py::dict d;
        d["xi"] = r.state.xi;
        d["z"] = r.state.z;
        d["u"] = Vector(r.state.xi.head(design_->horizon()));
        d["iterations"] = r.iterations;
        d["converged"] = r.converged;
        d["stationarity_residual"] = r.kkt.stationarity_residual;
        d["primal_residual"] = r.kkt.primal_residual;
        return d;
    }

    std::pair<Vector, Vector> step_once(const Vector& xi, const Vector& z, const Vector& x, const Vector& W) const {
        const SolverState next = step(gains(), SolverState{xi, z}, scaled_offset(gains(), x, W));
        return {next.xi, next.z};
    }

    py::dict simulate_run(double duration, std::optional<std::uint64_t> seed) const {
        WaveSpec spec = experiment_.wave_spec();
        if (seed) {
            spec.seed = *seed;
        }
        SimulationRecord rec;
        {
            py::gil_scoped_release release;
            rec = simulate(*design_, synthesize_wave_force(spec), SimulationOptions{duration, {}});
        }
        py::dict d;
        d["name"] = rec.name;
        for (const auto& [key, v] : {std::pair{"t", &rec.t}, {"u", &rec.u}, {"p", &rec.p}, {"v", &rec.v},
                                     {"w", &rec.w}, {"E", &rec.E}}) {
            d[key] = to_array(*v);
        }
        d["final_energy"] = rec.final_energy();
        d["peak_input"] = rec.peak_input();
        d["flops_per_step"] = rec.flops_per_step();
        d["u_violations"] = rec.violations.u;
        d["aborted"] = rec.aborted;
        d["abort_reason"] = rec.abort_reason;
        return d;
    }

private:
    ExperimentConfig experiment_;
    ControllerMode mode_ = ControllerMode::single_iteration;
    std::optional<ControllerDesign> design_;
};

}  // namespace

PYBIND11_MODULE(_wecmpc, m) {
    m.doc() = "Single-iteration MPC for wave energy converters";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<InvalidParameterError>(m, "InvalidParameterError", PyExc_ValueError);
    py::register_exception<ConvexityError>(m, "ConvexityError", PyExc_ValueError);
    py::register_exception<DesignError>(m, "DesignError", PyExc_RuntimeError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_RuntimeError);

    m.def("default_config", [] { return serialize_config(default_config()); });
    m.def("cost_config", [] { return serialize_config(paper_cost_config()); });
    m.def("normalize_config", [](const std::string& text) { return serialize_config(parse_config(text)); },
          py::arg("config_json"));
    m.def("design_report", [](const std::string& text) { return cmd_design(config_from(text), std::nullopt).json; },
          py::arg("config_json") = "");
    m.def("flops_report", [](const std::string& text) { return cmd_flops(config_from(text), std::nullopt).json; },
          py::arg("config_json") = "");

    m.def("rt_min_period", &rt_min_period, py::arg("T_p"), py::arg("OP"));
    m.def("ipm_min_period",
          [](double n_i, double T_p, double OP) {
              IpmCostModel c;
              c.n_i = n_i;
              c.T_p = T_p;
              c.OP = OP;
              return ipm_min_period(c);
          },
          py::arg("n_i") = 10.0, py::arg("T_p") = 2.0, py::arg("OP") = 1e11);
    m.def("count_step_flops",
          [](Index N, Index n) {
              const FlopLedger l = count_step_flops(N, n);
              py::dict d;
              for (const auto& e : l.entries) {
                  d[py::str(e.name)] = e.multiplications;
              }
              d["total"] = l.total();
              return d;
          },
          py::arg("N"), py::arg("n"));

    m.def("solve_qp",
          [](Matrix H, Vector f, Matrix G, Vector h, Vector lo, Vector hi, double tol) {
              ReducedQp qp;
              qp.Hr = std::move(H);
              qp.fr = std::move(f);
              qp.Gineq = G.size() == 0 ? Matrix::Zero(0, qp.Hr.cols()) : std::move(G);
              qp.hineq = std::move(h);
              qp.u_lower = std::move(lo);
              qp.u_upper = std::move(hi);
              QpOptions o;
              o.tol = tol;
              return qp_dict(solve_qp(qp, o));
          },
          py::arg("H"), py::arg("f"), py::arg("G"), py::arg("h"), py::arg("lower"), py::arg("upper"),
          py::arg("tol") = 1e-9);

    py::class_<Controller>(m, "Controller")
        .def(py::init<const std::string&, const std::string&>(), py::arg("config_json") = "", py::arg("name") = "")
        .def_property_readonly("name", [](const Controller& c) { return c.design().config.name; })
        .def_property_readonly("mode", [](const Controller& c) { return to_string(c.design().config.mode); })
        .def_property_readonly("N", [](const Controller& c) { return c.design().horizon(); })
        .def_property_readonly("n", [](const Controller& c) { return c.design().problem.states(); })
        .def_property_readonly("gains", &Controller::gain_summary)
        .def("initial_state",
             [](const Controller& c) {
                 const SolverState s = initial_state(c.gains());
                 return std::pair{s.xi, s.z};
             })
        .def("step", &Controller::step_once, py::arg("xi"), py::arg("z"), py::arg("x"), py::arg("W"))
        .def("solve_qp", &Controller::solve_qp_at, py::arg("x"), py::arg("W"))
        .def("solve_to_convergence", &Controller::converge, py::arg("x"), py::arg("W"), py::arg("tol") = 1e-11,
             py::arg("max_iter") = 500000)
        .def("simulate", &Controller::simulate_run, py::arg("duration"), py::arg("seed") = py::none());
}
