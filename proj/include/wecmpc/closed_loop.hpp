#pragma once

#include "wecmpc/condensation.hpp"
#include "wecmpc/model.hpp"
#include "wecmpc/proj_fl_cmo.hpp"
#include "wecmpc/qp_oracle.hpp"
#include "wecmpc/wave.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace wecmpc {

enum class ControllerMode {
    single_iteration,    ///< one solver step per period, input from the previous iterate
    full_mpc_baseline,   ///< reduced QP solved to tolerance every period
    converged_iteration  ///< the iteration run to its fixed point every period
};

enum class WarmStart { shift, hold, cold };

/// Where w is sampled inside each plant substep.
enum class WaveSampling { midpoint, start };

std::string to_string(ControllerMode mode);
std::string to_string(WarmStart warm);
std::string to_string(WaveSampling sampling);
ControllerMode parse_controller_mode(const std::string& text);
WarmStart parse_warm_start(const std::string& text);
WaveSampling parse_wave_sampling(const std::string& text);

struct ControllerConfig {
    std::string name = "controller";
    ControllerMode mode = ControllerMode::single_iteration;
    double T = 0.001;   ///< sampling period (s)
    double T_p = 0.2;   ///< prediction window (s)
    WarmStart warm_start = WarmStart::shift;
    Bounds bounds{};
    double r = 0.1;
    bool auto_raise_r = false;
    int substeps = 20;
    WaveSampling wave_sampling = WaveSampling::midpoint;
    double measurement_noise = 0.0;  ///< std of additive noise on x_k
    std::uint64_t noise_seed = 0;
    double step_safety = 0.99;
    QpOptions qp{};
    double converged_tol = 1e-11;
    int converged_max_iter = 500000;
    /// Evaluate the KKT residual of the iterate against each step's problem.
    bool track_kkt = false;
    /// Keep the full plant state for every substep.
    bool record_states = false;

    /// Throws InvalidParameterError.
    void validate() const;
    /// round(T_p / T); appends a warning when the ratio is fractional.
    [[nodiscard]] Index horizon(std::vector<std::string>* warnings = nullptr) const;
};

/// Everything a run needs that does not depend on the wave.
struct ControllerDesign {
    ControllerConfig config;
    DiscretePlant model;    ///< plant at period T
    DiscretePlant substep;  ///< plant at period T / substeps
    CondensedProblem problem;
    std::optional<SolverGains> gains;  ///< absent for the QP baseline
    std::vector<std::string> warnings;

    [[nodiscard]] Index horizon() const noexcept { return problem.horizon(); }
};

/// Throws ConvexityError, DesignError, RankError, InvalidParameterError.
ControllerDesign design_controller(const ContinuousPlant& plant, const ControllerConfig& config);

struct ViolationLog {
    std::uint64_t u = 0;  ///< applied inputs outside [u_lower, u_upper]
    std::uint64_t p = 0;  ///< substeps starting with p outside its bounds
    std::uint64_t v = 0;
    double worst_p_excess = 0.0;
    double worst_v_excess = 0.0;
};

/// Row j covers [t_j, t_j + h): state at t_j, input and wave force over the
/// substep, and the energy absorbed up to t_j + h.
struct SimulationRecord {
    std::string name;
    ControllerMode mode = ControllerMode::single_iteration;
    double T = 0.0;
    Index N = 0;
    int substeps = 0;
    double duration = 0.0;
    std::uint64_t wave_seed = 0;

    std::vector<double> t, u, p, v, w, E;
    std::vector<Vector> x;  ///< filled when record_states is set

    std::vector<std::uint64_t> step_flops;  ///< per control step, single-iteration mode
    std::vector<int> step_iterations;       ///< per control step, iterative modes
    std::vector<double> step_stationarity;  ///< per control step when track_kkt is set
    std::vector<double> step_primal;
    ViolationLog violations;

    double rho_bound = 0.0;
    double asymptotic_rate = 0.0;
    bool aborted = false;
    std::string abort_reason;

    [[nodiscard]] double final_energy() const noexcept { return E.empty() ? 0.0 : E.back(); }
    [[nodiscard]] double peak_input() const noexcept;
    /// Constant for a fixed horizon; 0 when the mode is not instrumented.
    [[nodiscard]] std::uint64_t flops_per_step() const noexcept;
};

struct SimulationOptions {
    double duration = 60.0;
    Vector x0;  ///< empty means zero
};

/// Dispatches on design.config.mode. Failures during the run produce a
/// partial record with `aborted` set.
SimulationRecord simulate(const ControllerDesign& design, const WaveForceSignal& wave,
                          const SimulationOptions& options);

SimulationRecord run_single_iteration_mpc(const ContinuousPlant& plant, const WaveForceSignal& wave,
                                          const ControllerConfig& config, double duration);
SimulationRecord run_baseline_mpc(const ContinuousPlant& plant, const WaveForceSignal& wave,
                                  const ControllerConfig& config, double duration);

/// Advances the warm start by one slot, duplicating the last entry of each
/// block, and projects onto the box.
SolverState shift_state(const SolverGains& gains, const SolverState& state);

struct ComparisonEntry {
    std::string name;
    ControllerMode mode = ControllerMode::single_iteration;
    double T = 0.0;
    Index N = 0;
    double final_energy = 0.0;
    double peak_input = 0.0;
    ViolationLog violations;
    std::uint64_t flops_per_step = 0;
};

struct ComparisonReport {
    double duration = 0.0;
    std::uint64_t wave_seed = 0;
    std::vector<ComparisonEntry> entries;
    /// improvement[a][b] = (E_a - E_b) / E_b; NaN when E_b = 0.
    std::vector<std::vector<double>> improvement;
};

[[nodiscard]] double relative_improvement(double energy_a, double energy_b);

/// Throws ComparisonError when durations or wave seeds differ.
ComparisonReport compare_runs(const std::vector<const SimulationRecord*>& records);

/// Decimal text with 17 significant digits, "." separator.
std::string format_double(double value);

void write_record_csv(const SimulationRecord& record, std::ostream& out);
void write_record_csv(const SimulationRecord& record, const std::string& path);

/// Structured summary: final energy, peak input, FLOPs per step, rho bound,
/// violation counts.
std::string record_summary_json(const SimulationRecord& record);
std::string comparison_json(const ComparisonReport& report);

}  // namespace wecmpc
