#include "wecmpc/errors.hpp"
#include "wecmpc/experiment.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct Overrides {
    std::string config_path;
    std::string profile = "desk";
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<double> duration;
};

wecmpc::ExperimentConfig load(const Overrides& o) {
    wecmpc::ExperimentConfig cfg =
        !o.config_path.empty() ? wecmpc::load_config(o.config_path)
        : o.profile == "cost"  ? wecmpc::paper_cost_config()
                               : wecmpc::default_config();
    if (o.seed) {
        cfg.seed = *o.seed;
        cfg.wave.seed = *o.seed;
    }
    if (o.duration) {
        cfg.duration = *o.duration;
    }
    if (o.out_dir) {
        cfg.output_dir = *o.out_dir;
    }
    cfg.validate();
    return cfg;
}

void print(const wecmpc::CommandOutput& out) {
    for (const auto& w : out.warnings) {
        std::cerr << "warning: " << w << "\n";
    }
    std::cout << out.text;
    for (const auto& f : out.files) {
        std::cout << "wrote " << f << "\n";
    }
}

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "Experiment JSON (default: built-in profile)");
    cmd->add_option("--profile", o.profile, "Built-in profile used without --config")
        ->check(CLI::IsMember({"desk", "cost"}));
    cmd->add_option("--out", o.out_dir, "Output directory (overrides output_dir)");
    cmd->add_option("--seed", o.seed, "Wave seed override");
    cmd->add_option("--duration", o.duration, "Simulated duration override (s)")
        ->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Single-iteration MPC for wave energy converters"};
    app.require_subcommand(1);

    Overrides o;
    auto* design = app.add_subcommand("design", "Design solver gains and print certificates");
    auto* simulate = app.add_subcommand("simulate", "Run every configured controller in closed loop");
    auto* benchmark = app.add_subcommand("benchmark", "Simulate every controller over the period sweep");
    auto* flops = app.add_subcommand("flops", "Per-step FLOP ledger and minimum sampling periods");
    auto* show = app.add_subcommand("config", "Print the effective configuration as JSON");
    for (auto* cmd : {design, simulate, benchmark, flops, show}) {
        add_common(cmd, o);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : wecmpc::kExitConfig;
    }

    try {
        const wecmpc::ExperimentConfig cfg = load(o);
        if (*show) {
            std::cout << wecmpc::serialize_config(cfg);
        } else if (*design) {
            print(wecmpc::cmd_design(cfg, o.out_dir));
        } else if (*flops) {
            print(wecmpc::cmd_flops(cfg, o.out_dir));
        } else if (*simulate) {
            print(wecmpc::cmd_simulate(cfg, cfg.output_dir).output);
        } else if (*benchmark) {
            print(wecmpc::cmd_benchmark(cfg, cfg.output_dir).output);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return wecmpc::exit_code_for(e);
    }
    return wecmpc::kExitOk;
}
