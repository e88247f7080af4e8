// experiment.hpp - config-driven experiment orchestration
//
// One structured JSON config describes the system (fields carry explicit
// units, dB converted to linear exactly once at ingestion), the schemes, the
// sweep axes, and optional federated-learning runs with bound verification.
// Outputs: results.csv (deterministic given config+seeds), timings.csv
// (measured, excluded from the determinism contract), per-run JSON and
// convergence traces, and a manifest that is itself a valid config.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "umaircomp/baselines.hpp"
#include "umaircomp/bounds.hpp"
#include "umaircomp/fl.hpp"

namespace umaircomp::experiment {

extern const char* kVersion;

double dbm_to_watt(double dbm);
double db_to_linear(double db);

struct TaskSpec {
    int dim = 8;
    int samples_per_user = 40;
    double ridge = 0.5;
    double shift = 0.5;
    std::uint64_t seed = 7;
    bool identical_users = false;
};

struct FlSpec {
    bool enabled = false;
    int rounds = 20;
    int local_epochs = 1;
    std::string step = "1/L";  // "1/L", "theorem2", or a number as text
    int replicas = 20;
    bool eta_lag = false;
    TaskSpec task;
};

struct ExperimentConfig {
    SystemConfig base;
    std::vector<std::string> schemes;
    std::vector<std::uint64_t> seeds;
    std::vector<int> sweep_antennas;   // empty = base value only
    std::vector<int> sweep_users;
    std::vector<double> sweep_noise_w;  // applied to server and users
    std::vector<double> sweep_power_w;
    baselines::SchemeOptions solver;
    FlSpec fl;
    std::string out_dir = "results";

    static ExperimentConfig parse_text(const std::string& json_text);
    static ExperimentConfig parse_file(const std::string& path);
    std::string to_json() const;  // resolved echo; parse(to_json()) reproduces the run
    void validate() const;
};

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> scheme;
};

struct ExperimentOutcome {
    int exit_code = 0;  // 0 ok, 1 config error, 2 run failures present
    int cells = 0;
    int failures = 0;
    std::string out_dir;
};

// Design optimization over the sweep. Writes results.csv, timings.csv,
// manifest.json and runs/<id>/{run.json,convergence.csv}.
ExperimentOutcome run_experiment(const std::string& config_path, const Overrides& ov = {});

// Federated runs + bound verification for every configured scheme. Writes
// fl_<scheme>.jsonl, fl_summary.csv and bounds.json under out_dir.
ExperimentOutcome run_fl_experiment(const std::string& config_path, const Overrides& ov = {},
                                    bool verify_bounds = true);

// Wall-clock sweep (median of repeats after one warm-up) plus a serial vs
// parallel kernel comparison. Writes bench.csv; not determinism-checked.
ExperimentOutcome run_bench(const std::string& config_path, const Overrides& ov = {});

// Tidy per-figure CSVs from a results directory.
//   convergence   -> scheme,outer_iter,objective
//   mse-vs-N      -> scheme,antennas,seed,objective
//   runtime-vs-N  -> scheme,antennas,seed,wall_ns
//   loss-vs-round -> scheme,round,loss,bound
void emit_plot_data(const std::string& results_dir, const std::string& kind,
                    const std::string& scheme_filter = "");

} // namespace umaircomp::experiment
