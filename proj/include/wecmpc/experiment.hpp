#pragma once

#include "wecmpc/closed_loop.hpp"
#include "wecmpc/model.hpp"
#include "wecmpc/qp_oracle.hpp"
#include "wecmpc/wave.hpp"

#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <vector>

namespace wecmpc {

struct PlantConfig {
    double mass = 2.0;
    double stiffness = 60.0;
    double damping = 1.0;
    std::optional<RadiationLag> radiation = RadiationLag{2.0, -3.0};

    [[nodiscard]] ContinuousPlant build() const;
};

struct ExperimentConfig {
    PlantConfig plant;
    WaveSpec wave;  ///< seed is taken from `seed`
    std::vector<ControllerConfig> controllers;
    double duration = 60.0;
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    IpmCostModel cost;
    /// Sampling periods swept by the benchmark command.
    std::vector<double> benchmark_periods{0.1, 0.05, 0.02};
    /// Concurrent simulations; 0 picks the hardware concurrency.
    int threads = 0;

    /// Throws ConfigError naming the offending field.
    void validate() const;
    [[nodiscard]] WaveSpec wave_spec() const;
};

/// Strict parse: unknown keys and wrong types are ConfigErrors. Missing
/// optional keys take the defaults above.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
/// Writes every field, so parse(serialize(c)) reproduces c exactly.
std::string serialize_config(const ExperimentConfig& config);

/// Desk-scale absorber: three controllers (QP baseline at 50 ms and 20 ms,
/// single iteration at 1 ms) over a 0.2 s window.
ExperimentConfig default_config();
/// Cost-model profile: T_p = 2 s, OP = 1e11 FLOP/s, n_i = 10.
ExperimentConfig paper_cost_config();

struct CommandOutput {
    std::string text;  ///< human-readable report
    std::string json;  ///< structured report
    std::vector<std::string> files;
    std::vector<std::string> warnings;
};

/// Gains and certificates per controller; writes design.json when `out_dir`
/// is set.
CommandOutput cmd_design(const ExperimentConfig& config, const std::optional<std::string>& out_dir);

struct SimulationBatch {
    CommandOutput output;
    std::vector<SimulationRecord> records;
    ComparisonReport comparison;
};

/// One CSV and one summary JSON per controller plus comparison.json. Throws
/// NumericError after writing the files when a run aborted.
SimulationBatch cmd_simulate(const ExperimentConfig& config, const std::string& out_dir);

/// cmd_simulate over every controller at every benchmark period.
SimulationBatch cmd_benchmark(const ExperimentConfig& config, const std::string& out_dir);

/// Per-controller FLOP ledger and the real-time/interior-point period
/// estimates; writes flops.json when `out_dir` is set.
CommandOutput cmd_flops(const ExperimentConfig& config, const std::optional<std::string>& out_dir);

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDesign = 3;
inline constexpr int kExitRuntime = 4;

int exit_code_for(const std::exception& error) noexcept;

}  // namespace wecmpc
