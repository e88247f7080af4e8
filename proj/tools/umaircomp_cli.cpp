// umaircomp command line: seeded transceiver-design experiments, federated
// learning simulation over the analog channel, loss-bound verification,
// benchmarking, and plot-data emission. One verb per module; all experiment
// parameters come from a JSON config (see README).

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "umaircomp/exec.hpp"
#include "umaircomp/experiment.hpp"
#include "umaircomp/io.hpp"

namespace xp = umaircomp::experiment;

int main(int argc, char** argv) {
    CLI::App app{"umaircomp: unit-modulus over-the-air-computation transceiver design"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> scheme;
    bool serial = false;
    app.add_option("--config", config_path, "experiment config JSON (or a manifest.json)");
    app.add_option("--seed", seed, "override the config's seed list with one seed");
    app.add_option("--out-dir", out_dir, "override the config's output directory");
    app.add_option("--scheme", scheme, "run a single scheme");
    app.add_flag("--serial", serial, "disable the OpenMP kernels");

    auto* cmd_optimize =
        app.add_subcommand("optimize", "solve transceiver designs over the configured sweep");
    auto* cmd_fl = app.add_subcommand("simulate-fl", "run the federated loop per scheme");
    auto* cmd_bounds =
        app.add_subcommand("verify-bounds", "run the federated loop and check the loss bounds");
    auto* cmd_bench =
        app.add_subcommand("bench", "time each scheme, serial vs parallel kernels");
    auto* cmd_plots = app.add_subcommand("emit-plots", "write tidy per-figure CSV data");

    std::string results_dir = "results";
    std::string kind;
    cmd_plots->add_option("--results", results_dir, "results directory to read");
    cmd_plots->add_option("--kind", kind,
                          "convergence | mse-vs-N | runtime-vs-N | loss-vs-round")
        ->required();

    CLI11_PARSE(app, argc, argv);
    if (serial) umaircomp::set_default_exec(umaircomp::Exec::serial);

    xp::Overrides ov;
    ov.seed = seed;
    ov.out_dir = out_dir;
    ov.scheme = scheme;

    try {
        if (cmd_plots->parsed()) {
            xp::emit_plot_data(results_dir, kind, scheme.value_or(""));
            std::cout << "wrote " << results_dir << "/plots/" << kind << ".csv\n";
            return 0;
        }
        if (config_path.empty()) {
            std::cerr << "error: --config is required\n";
            return 1;
        }
        xp::ExperimentOutcome out;
        if (cmd_optimize->parsed()) {
            out = xp::run_experiment(config_path, ov);
            std::cout << out.cells << " cells, " << out.failures << " failures -> "
                      << out.out_dir << "\n";
        } else if (cmd_fl->parsed()) {
            out = xp::run_fl_experiment(config_path, ov, /*verify_bounds=*/false);
            std::cout << "federated runs for " << out.cells << " scheme(s) -> " << out.out_dir
                      << "\n";
        } else if (cmd_bounds->parsed()) {
            out = xp::run_fl_experiment(config_path, ov, /*verify_bounds=*/true);
            std::cout << umaircomp::read_file(
                umaircomp::join_path(out.out_dir, "bounds.txt"));
        } else if (cmd_bench->parsed()) {
            out = xp::run_bench(config_path, ov);
            std::cout << "bench over " << out.cells << " cells -> " << out.out_dir
                      << "/bench.csv\n";
        }
        return out.exit_code;
    } catch (const umaircomp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
