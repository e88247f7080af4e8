#include "umaircomp/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>

#include <json.hpp>

#include "umaircomp/exec.hpp"
#include "umaircomp/io.hpp"

namespace umaircomp::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

const char* kVersion = "umaircomp 0.1.0";

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

namespace {

using Clock = std::chrono::steady_clock;

long long ns_since(Clock::time_point t0) {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count();
}

std::vector<double> number_or_array(const json& j, int count, const char* field) {
    std::vector<double> out;
    if (j.is_number()) {
        out.assign(static_cast<std::size_t>(count), j.get<double>());
    } else if (j.is_array()) {
        out = j.get<std::vector<double>>();
        if (static_cast<int>(out.size()) != count)
            throw ConfigError(std::string(field) + ": expected " + std::to_string(count) +
                              " entries, got " + std::to_string(out.size()));
    } else {
        throw ConfigError(std::string(field) + ": expected number or array");
    }
    return out;
}

// The system block in resolved (linear) form, for the manifest echo.
json system_to_json(const SystemConfig& cfg) {
    json j;
    j["antennas"] = cfg.antennas;
    j["users"] = cfg.users;
    j["block_len"] = cfg.block_len;
    j["max_tx_power_w"] = cfg.max_tx_power;
    j["server_gain"] = cfg.server_gain;
    j["server_noise_w"] = cfg.server_noise;
    j["user_noise_w"] = cfg.user_noise;
    j["pathloss"] = cfg.pathloss;
    j["weights"] = cfg.weights;
    return j;
}

SystemConfig system_from_json(const json& j) {
    SystemConfig cfg;
    cfg.antennas = j.value("antennas", 8);
    cfg.users = j.value("users", 4);
    cfg.block_len = j.value("block_len", 16);
    cfg.server_gain = j.value("server_gain", 1.0);

    // Units are explicit in the field names; dB forms are converted here,
    // exactly once. Defaults mirror the reference setup: P0 = 10 dBm,
    // noise = -80 dBm, pathloss = -60 dB, gamma = 1.
    if (j.contains("max_tx_power_w") && j.contains("max_tx_power_dbm"))
        throw ConfigError("system: give max_tx_power_w or max_tx_power_dbm, not both");
    if (j.contains("max_tx_power_w"))
        cfg.max_tx_power = j.at("max_tx_power_w").get<double>();
    else
        cfg.max_tx_power = dbm_to_watt(j.value("max_tx_power_dbm", 10.0));

    if (j.contains("server_noise_w") && j.contains("server_noise_dbm"))
        throw ConfigError("system: give server_noise_w or server_noise_dbm, not both");
    if (j.contains("server_noise_w"))
        cfg.server_noise = j.at("server_noise_w").get<double>();
    else
        cfg.server_noise = dbm_to_watt(j.value("server_noise_dbm", -80.0));

    if (j.contains("user_noise_w") && j.contains("user_noise_dbm"))
        throw ConfigError("system: give user_noise_w or user_noise_dbm, not both");
    if (j.contains("user_noise_w"))
        cfg.user_noise = number_or_array(j.at("user_noise_w"), cfg.users, "system.user_noise_w");
    else if (j.contains("user_noise_dbm")) {
        cfg.user_noise =
            number_or_array(j.at("user_noise_dbm"), cfg.users, "system.user_noise_dbm");
        for (double& v : cfg.user_noise) v = dbm_to_watt(v);
    } else {
        cfg.user_noise.assign(static_cast<std::size_t>(cfg.users), dbm_to_watt(-80.0));
    }

    if (j.contains("pathloss") && j.contains("pathloss_db"))
        throw ConfigError("system: give pathloss or pathloss_db, not both");
    if (j.contains("pathloss"))
        cfg.pathloss = number_or_array(j.at("pathloss"), cfg.users, "system.pathloss");
    else if (j.contains("pathloss_db")) {
        cfg.pathloss = number_or_array(j.at("pathloss_db"), cfg.users, "system.pathloss_db");
        for (double& v : cfg.pathloss) v = db_to_linear(v);
    } else {
        cfg.pathloss.assign(static_cast<std::size_t>(cfg.users), db_to_linear(-60.0));
    }

    if (j.contains("weights"))
        cfg.weights = number_or_array(j.at("weights"), cfg.users, "system.weights");
    else
        cfg.weights.assign(static_cast<std::size_t>(cfg.users), 1.0 / cfg.users);
    return cfg;
}

struct Cell {
    std::string scheme;
    SystemConfig cfg;
    std::uint64_t seed = 0;
};

struct CellResult {
    double objective = 0.0;
    int worst_user = 0;
    bool feasible = false;
    double unit_modulus_violation = 0.0;
    double rank1_residual = 0.0;
    double power_violation = 0.0;
    std::string status = "ok";
    long long wall_ns = 0;
    std::vector<double> convergence;
    json design_json;  // only populated for small designs
};

std::vector<Cell> enumerate_cells(const ExperimentConfig& cfg) {
    std::vector<Cell> cells;
    const std::vector<int> ns =
        cfg.sweep_antennas.empty() ? std::vector<int>{cfg.base.antennas} : cfg.sweep_antennas;
    const std::vector<int> ks =
        cfg.sweep_users.empty() ? std::vector<int>{cfg.base.users} : cfg.sweep_users;
    const std::vector<double> noises = cfg.sweep_noise_w.empty()
                                           ? std::vector<double>{cfg.base.server_noise}
                                           : cfg.sweep_noise_w;
    const std::vector<double> powers = cfg.sweep_power_w.empty()
                                           ? std::vector<double>{cfg.base.max_tx_power}
                                           : cfg.sweep_power_w;
    for (const std::string& scheme : cfg.schemes)
        for (int n : ns)
            for (int k : ks)
                for (double noise : noises)
                    for (double power : powers)
                        for (std::uint64_t seed : cfg.seeds) {
                            Cell cell;
                            cell.scheme = scheme;
                            SystemConfig c = cfg.base;
                            c.antennas = n;
                            if (k != cfg.base.users) {
                                c.users = k;
                                c.user_noise.assign(static_cast<std::size_t>(k),
                                                    cfg.base.user_noise.front());
                                c.weights.assign(static_cast<std::size_t>(k), 1.0 / k);
                                c.pathloss.assign(static_cast<std::size_t>(k),
                                                  cfg.base.pathloss.front());
                            }
                            if (!cfg.sweep_noise_w.empty()) {
                                c.server_noise = noise;
                                c.user_noise.assign(static_cast<std::size_t>(c.users), noise);
                            }
                            if (!cfg.sweep_power_w.empty()) c.max_tx_power = power;
                            cell.cfg = std::move(c);
                            cell.seed = seed;
                            cells.push_back(std::move(cell));
                        }
    return cells;
}

json cmat_to_json(const CMat& m) {
    json entries = json::array();
    for (int c = 0; c < m.cols(); ++c)
        for (int r = 0; r < m.rows(); ++r)
            entries.push_back({m(r, c).real(), m(r, c).imag()});
    json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    j["entries"] = entries;
    return j;
}

json cvec_to_json(const CVec& v) {
    json entries = json::array();
    for (const cplx& x : v) entries.push_back({x.real(), x.imag()});
    return entries;
}

std::string cell_key_csv(const Cell& cell) {
    std::ostringstream out;
    out << cell.scheme << ',' << cell.cfg.antennas << ',' << cell.cfg.users << ','
        << fmt_double(cell.cfg.max_tx_power) << ',' << fmt_double(cell.cfg.server_noise)
        << ',' << cell.seed;
    return out.str();
}

fl::StepSchedule make_schedule(const FlSpec& spec, const fl::QuadraticTask& task) {
    if (spec.step == "1/L") return fl::StepSchedule::constant_step(1.0 / task.smoothness);
    if (spec.step == "theorem2")
        return fl::StepSchedule::inverse_time(task.strong_convexity, task.smoothness,
                                              spec.local_epochs);
    try {
        return fl::StepSchedule::constant_step(std::stod(spec.step));
    } catch (const std::exception&) {
        throw ConfigError("fl.step must be \"1/L\", \"theorem2\", or a number, got '" +
                          spec.step + "'");
    }
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    const std::string text = read_file(path);
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::istringstream ls(line);
        std::string field;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        rows.push_back(std::move(fields));
    }
    return rows;
}

} // namespace

ExperimentConfig ExperimentConfig::parse_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (j.contains("config") && j.contains("version")) j = j.at("config");  // manifest replay

    ExperimentConfig cfg;
    try {
        cfg.base = system_from_json(j.value("system", json::object()));
        cfg.schemes = j.value("schemes", std::vector<std::string>{"pam"});
        if (j.contains("seeds"))
            cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        else
            cfg.seeds = {1};
        if (j.contains("sweep")) {
            const json& s = j.at("sweep");
            cfg.sweep_antennas = s.value("antennas", std::vector<int>{});
            cfg.sweep_users = s.value("users", std::vector<int>{});
            if (s.contains("noise_dbm")) {
                cfg.sweep_noise_w = s.at("noise_dbm").get<std::vector<double>>();
                for (double& v : cfg.sweep_noise_w) v = dbm_to_watt(v);
            }
            if (s.contains("noise_w"))
                cfg.sweep_noise_w = s.at("noise_w").get<std::vector<double>>();
            if (s.contains("tx_power_dbm")) {
                cfg.sweep_power_w = s.at("tx_power_dbm").get<std::vector<double>>();
                for (double& v : cfg.sweep_power_w) v = dbm_to_watt(v);
            }
            if (s.contains("tx_power_w"))
                cfg.sweep_power_w = s.at("tx_power_w").get<std::vector<double>>();
        }
        if (j.contains("pam")) {
            const json& p = j.at("pam");
            cfg.solver.pam.penalty = p.value("penalty", 1.0);
            cfg.solver.pam.outer_iters = p.value("outer_iters", 20);
            cfg.solver.pam.inner_f_iters = p.value("inner_f_iters", 200);
            cfg.solver.pam.inner_t_iters = p.value("inner_t_iters", 200);
            cfg.solver.pam.rel_tol = p.value("rel_tol", 1e-8);
            cfg.solver.pam.penalty_continuation = p.value("penalty_continuation", false);
        }
        if (j.contains("agp")) {
            const json& a = j.at("agp");
            cfg.solver.agp.smoothing = a.value("smoothing", -1.0);
            cfg.solver.agp.inner_eps = a.value("inner_eps", 1e-9);
            cfg.solver.agp.max_fixed_point_iters = a.value("max_fixed_point_iters", 200);
            cfg.solver.agp.max_inner_iters = a.value("max_inner_iters", 20000);
            cfg.solver.agp.fixed_point_tol = a.value("fixed_point_tol", 1e-8);
            cfg.solver.agp.w_refine_iters = a.value("w_refine_iters", 20);
            cfg.solver.agp.w_refine_tol = a.value("w_refine_tol", 1e-10);
        }
        if (j.contains("fl")) {
            const json& f = j.at("fl");
            cfg.fl.enabled = true;
            cfg.fl.rounds = f.value("rounds", 20);
            cfg.fl.local_epochs = f.value("local_epochs", 1);
            if (f.contains("step") && f.at("step").is_number())
                cfg.fl.step = fmt_double(f.at("step").get<double>());
            else
                cfg.fl.step = f.value("step", std::string("1/L"));
            cfg.fl.replicas = f.value("replicas", 20);
            cfg.fl.eta_lag = f.value("eta_lag", false);
            if (f.contains("task")) {
                const json& t = f.at("task");
                cfg.fl.task.dim = t.value("dim", 8);
                cfg.fl.task.samples_per_user = t.value("samples_per_user", 40);
                cfg.fl.task.ridge = t.value("ridge", 0.5);
                cfg.fl.task.shift = t.value("shift", 0.5);
                cfg.fl.task.seed = t.value("seed", static_cast<std::uint64_t>(7));
                cfg.fl.task.identical_users = t.value("identical_users", false);
            }
        }
        cfg.out_dir = j.value("out_dir", std::string("results"));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field error: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return parse_text(text);
}

void ExperimentConfig::validate() const {
    base.validate();
    if (schemes.empty()) throw ConfigError("config needs at least one scheme");
    if (seeds.empty()) throw ConfigError("config needs at least one seed");
    const auto& registry = baselines::SchemeRegistry::instance();
    for (const std::string& s : schemes)
        if (!registry.contains(s)) {
            std::string known;
            for (const std::string& name : registry.names()) {
                if (!known.empty()) known += ", ";
                known += name;
            }
            throw ConfigError("unknown scheme '" + s + "'; available: " + known);
        }
    for (int n : sweep_antennas)
        if (n < 1) throw ConfigError("sweep.antennas entries must be positive");
    for (int k : sweep_users)
        if (k < 1) throw ConfigError("sweep.users entries must be positive");
    for (double v : sweep_noise_w)
        if (!(v >= 0.0)) throw ConfigError("sweep noise entries must be >= 0");
    for (double v : sweep_power_w)
        if (!(v > 0.0)) throw ConfigError("sweep power entries must be > 0");
    if (fl.enabled) {
        if (fl.rounds < 1) throw ConfigError("fl.rounds must be >= 1");
        if (fl.local_epochs < 1) throw ConfigError("fl.local_epochs must be >= 1");
        if (fl.replicas < 1) throw ConfigError("fl.replicas must be >= 1");
        if (fl.task.dim < 2 || fl.task.dim % 2 != 0)
            throw ConfigError("fl.task.dim must be even and >= 2");
    }
}

std::string ExperimentConfig::to_json() const {
    json j;
    j["system"] = system_to_json(base);
    j["schemes"] = schemes;
    j["seeds"] = seeds;
    json sweep;
    if (!sweep_antennas.empty()) sweep["antennas"] = sweep_antennas;
    if (!sweep_users.empty()) sweep["users"] = sweep_users;
    if (!sweep_noise_w.empty()) sweep["noise_w"] = sweep_noise_w;
    if (!sweep_power_w.empty()) sweep["tx_power_w"] = sweep_power_w;
    if (!sweep.empty()) j["sweep"] = sweep;
    j["pam"] = {{"penalty", solver.pam.penalty},
                {"outer_iters", solver.pam.outer_iters},
                {"inner_f_iters", solver.pam.inner_f_iters},
                {"inner_t_iters", solver.pam.inner_t_iters},
                {"rel_tol", solver.pam.rel_tol},
                {"penalty_continuation", solver.pam.penalty_continuation}};
    j["agp"] = {{"smoothing", solver.agp.smoothing},
                {"inner_eps", solver.agp.inner_eps},
                {"max_fixed_point_iters", solver.agp.max_fixed_point_iters},
                {"max_inner_iters", solver.agp.max_inner_iters},
                {"fixed_point_tol", solver.agp.fixed_point_tol},
                {"w_refine_iters", solver.agp.w_refine_iters},
                {"w_refine_tol", solver.agp.w_refine_tol}};
    if (fl.enabled) {
        j["fl"] = {{"rounds", fl.rounds},
                   {"local_epochs", fl.local_epochs},
                   {"step", fl.step},
                   {"replicas", fl.replicas},
                   {"eta_lag", fl.eta_lag},
                   {"task",
                    {{"dim", fl.task.dim},
                     {"samples_per_user", fl.task.samples_per_user},
                     {"ridge", fl.task.ridge},
                     {"shift", fl.task.shift},
                     {"seed", fl.task.seed},
                     {"identical_users", fl.task.identical_users}}}};
    }
    j["out_dir"] = out_dir;
    return j.dump(2);
}

namespace {

ExperimentConfig load_with_overrides(const std::string& config_path, const Overrides& ov) {
    ExperimentConfig cfg = ExperimentConfig::parse_file(config_path);
    if (ov.seed) cfg.seeds = {*ov.seed};
    if (ov.out_dir) cfg.out_dir = *ov.out_dir;
    if (ov.scheme) cfg.schemes = {*ov.scheme};
    cfg.validate();
    return cfg;
}

void write_manifest(const ExperimentConfig& cfg) {
    json m;
    m["version"] = kVersion;
    m["config"] = json::parse(cfg.to_json());
    write_file(join_path(cfg.out_dir, "manifest.json"), m.dump(2) + "\n");
}

} // namespace

ExperimentOutcome run_experiment(const std::string& config_path, const Overrides& ov) {
    const ExperimentConfig cfg = load_with_overrides(config_path, ov);
    const std::vector<Cell> cells = enumerate_cells(cfg);
    std::vector<CellResult> results(cells.size());

    const auto& registry = baselines::SchemeRegistry::instance();
    par_for(static_cast<int>(cells.size()), [&](int idx) {
        const Cell& cell = cells[static_cast<std::size_t>(idx)];
        CellResult& out = results[static_cast<std::size_t>(idx)];
        try {
            const ChannelSet ch = generate_channels(cell.cfg, cell.seed);
            const auto t0 = Clock::now();
            const baselines::SchemeRun run = registry.run(cell.scheme, ch, cell.cfg, cfg.solver);
            out.wall_ns = ns_since(t0);
            out.objective = run.objective;
            out.worst_user = run.worst_user;
            out.convergence = run.convergence;
            const FeasibilityReport rep = check_feasibility(run.design, cell.cfg);
            out.feasible = rep.ok;
            out.unit_modulus_violation = rep.unit_modulus_violation;
            out.rank1_residual = rep.rank1_residual;
            out.power_violation = rep.power_violation;
            if (cell.cfg.antennas <= 32) {
                out.design_json["server"] = cmat_to_json(run.design.server);
                out.design_json["user_tx"] = cvec_to_json(run.design.user_tx);
                out.design_json["user_rx"] = cvec_to_json(run.design.user_rx);
                out.design_json["structure"] = structure_name(run.design.structure);
            }
        } catch (const std::exception& e) {
            out.status = std::string("error: ") + e.what();
        }
    });

    std::ostringstream res_csv;
    res_csv << "scheme,antennas,users,tx_power_w,server_noise_w,seed,objective,worst_user,"
               "feasible,status\n";
    std::ostringstream tim_csv;
    tim_csv << "scheme,antennas,users,tx_power_w,server_noise_w,seed,wall_ns\n";
    int failures = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const CellResult& r = results[i];
        const std::string key = cell_key_csv(cells[i]);
        res_csv << key << ',' << fmt_double(r.objective) << ',' << r.worst_user << ','
                << (r.feasible ? 1 : 0) << ',' << (r.status == "ok" ? "ok" : "failed")
                << '\n';
        tim_csv << key << ',' << r.wall_ns << '\n';
        if (r.status != "ok") ++failures;

        json run_json;
        run_json["scheme"] = cells[i].scheme;
        run_json["system"] = system_to_json(cells[i].cfg);
        run_json["seed"] = cells[i].seed;
        run_json["objective"] = r.objective;
        run_json["worst_user"] = r.worst_user;
        run_json["feasible"] = r.feasible;
        run_json["unit_modulus_violation"] = r.unit_modulus_violation;
        run_json["rank1_residual"] = r.rank1_residual;
        run_json["power_violation"] = r.power_violation;
        run_json["status"] = r.status;
        if (!r.design_json.is_null()) run_json["design"] = r.design_json;
        char id[32];
        std::snprintf(id, sizeof(id), "run%05zu", i);
        const std::string dir = join_path(join_path(cfg.out_dir, "runs"), id);
        write_file(join_path(dir, "run.json"), run_json.dump(2) + "\n");
        std::ostringstream conv;
        conv << "iter,objective\n";
        for (std::size_t it = 0; it < r.convergence.size(); ++it)
            conv << it << ',' << fmt_double(r.convergence[it]) << '\n';
        write_file(join_path(dir, "convergence.csv"), conv.str());
    }
    write_file(join_path(cfg.out_dir, "results.csv"), res_csv.str());
    write_file(join_path(cfg.out_dir, "timings.csv"), tim_csv.str());
    write_manifest(cfg);

    ExperimentOutcome out;
    out.cells = static_cast<int>(cells.size());
    out.failures = failures;
    out.exit_code = failures > 0 ? 2 : 0;
    out.out_dir = cfg.out_dir;
    return out;
}

ExperimentOutcome run_fl_experiment(const std::string& config_path, const Overrides& ov,
                                    bool verify_bounds) {
    const ExperimentConfig cfg = load_with_overrides(config_path, ov);
    if (!cfg.fl.enabled) throw ConfigError("config has no fl section");

    const fl::QuadraticTask task = fl::make_quadratic_task(
        cfg.base.users, cfg.fl.task.dim, cfg.fl.task.samples_per_user, cfg.fl.task.ridge,
        cfg.fl.task.shift, cfg.fl.task.seed, cfg.fl.task.identical_users);

    fl::FlOptions fopts;
    fopts.rounds = cfg.fl.rounds;
    fopts.local_epochs = cfg.fl.local_epochs;
    fopts.schedule = make_schedule(cfg.fl, task);
    fopts.schedule.local_epochs = cfg.fl.local_epochs;
    fopts.eta_lag = cfg.fl.eta_lag;

    ExperimentOutcome out;
    out.out_dir = cfg.out_dir;
    std::ostringstream summary;
    summary << "round,loss,max_mse_analytic,max_err_realized,scheme,seed\n";
    json bound_reports = json::array();
    std::ostringstream bounds_txt;

    for (const std::string& scheme : cfg.schemes) {
        ++out.cells;
        try {
            const std::vector<fl::FlHistory> reps = fl::run_federated_replicas(
                task, cfg.base, scheme, cfg.solver, fopts, cfg.seeds.front(), cfg.fl.replicas);
            write_file(join_path(cfg.out_dir, "fl_" + scheme + ".jsonl"),
                       reps.front().to_jsonl());
            std::istringstream rows(reps.front().summary_csv());
            std::string line;
            std::getline(rows, line);  // header
            while (std::getline(rows, line)) summary << line << '\n';

            if (verify_bounds) {
                bounds::BoundReport rep;
                if (fopts.schedule.kind == fl::StepSchedule::Kind::constant &&
                    cfg.fl.step == "1/L" && cfg.fl.local_epochs == 1) {
                    rep = bounds::theorem1_bound(reps, task);
                } else if (fopts.schedule.kind == fl::StepSchedule::Kind::inverse_time) {
                    const double g = fl::estimate_gradient_bound(task, fopts);
                    rep = bounds::theorem2_bound(reps, task, g);
                } else {
                    continue;  // no theorem matches this schedule
                }
                bound_reports.push_back(json::parse(rep.to_json()));
                bounds_txt << rep.human_table() << '\n';
            }
        } catch (const std::exception& e) {
            ++out.failures;
            bounds_txt << "scheme " << scheme << " failed: " << e.what() << "\n\n";
        }
    }
    write_file(join_path(cfg.out_dir, "fl_summary.csv"), summary.str());
    if (verify_bounds) {
        write_file(join_path(cfg.out_dir, "bounds.json"), bound_reports.dump(2) + "\n");
        write_file(join_path(cfg.out_dir, "bounds.txt"), bounds_txt.str());
    }
    write_manifest(cfg);
    out.exit_code = out.failures > 0 ? 2 : 0;
    return out;
}

ExperimentOutcome run_bench(const std::string& config_path, const Overrides& ov) {
    const ExperimentConfig cfg = load_with_overrides(config_path, ov);
    const std::vector<Cell> cells = enumerate_cells(cfg);
    const auto& registry = baselines::SchemeRegistry::instance();

    std::ostringstream csv;
    csv << "scheme,antennas,users,tx_power_w,server_noise_w,seed,exec,threads,wall_ns\n";
    ExperimentOutcome out;
    out.out_dir = cfg.out_dir;

    const Exec saved = default_exec();
    for (const Cell& cell : cells) {
        ++out.cells;
        try {
            const ChannelSet ch = generate_channels(cell.cfg, cell.seed);
            for (Exec ex : {Exec::serial, Exec::parallel}) {
                set_default_exec(ex);
                registry.run(cell.scheme, ch, cell.cfg, cfg.solver);  // warm-up
                std::vector<long long> times;
                for (int rep = 0; rep < 5; ++rep) {
                    const auto t0 = Clock::now();
                    registry.run(cell.scheme, ch, cell.cfg, cfg.solver);
                    times.push_back(ns_since(t0));
                }
                std::sort(times.begin(), times.end());
                csv << cell_key_csv(cell) << ','
                    << (ex == Exec::serial ? "serial" : "parallel") << ','
                    << (ex == Exec::serial ? 1 : worker_count()) << ',' << times[2] << '\n';
            }
        } catch (const std::exception&) {
            ++out.failures;
        }
    }
    set_default_exec(saved);
    write_file(join_path(cfg.out_dir, "bench.csv"), csv.str());
    write_manifest(cfg);
    out.exit_code = out.failures > 0 ? 2 : 0;
    return out;
}

void emit_plot_data(const std::string& results_dir, const std::string& kind,
                    const std::string& scheme_filter) {
    const std::vector<std::string> kinds = {"convergence", "mse-vs-N", "runtime-vs-N",
                                            "loss-vs-round"};
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) {
        std::string all;
        for (const std::string& k : kinds) {
            if (!all.empty()) all += ", ";
            all += k;
        }
        throw ConfigError("unknown plot kind '" + kind + "'; available: " + all);
    }

    std::ostringstream out;
    int rows = 0;
    if (kind == "convergence") {
        out << "scheme,outer_iter,objective\n";
        const fs::path runs = fs::path(results_dir) / "runs";
        std::vector<fs::path> dirs;
        if (fs::exists(runs))
            for (const auto& e : fs::directory_iterator(runs)) dirs.push_back(e.path());
        std::sort(dirs.begin(), dirs.end());
        for (const fs::path& dir : dirs) {
            const json run = json::parse(read_file((dir / "run.json").string()));
            const std::string scheme = run.at("scheme").get<std::string>();
            if (!scheme_filter.empty() && scheme != scheme_filter) continue;
            for (const auto& row : read_csv((dir / "convergence.csv").string())) {
                if (row.front() == "iter") continue;
                out << scheme << ',' << row.at(0) << ',' << row.at(1) << '\n';
                ++rows;
            }
        }
    } else if (kind == "mse-vs-N" || kind == "runtime-vs-N") {
        const bool timing = kind == "runtime-vs-N";
        out << (timing ? "scheme,antennas,seed,wall_ns\n" : "scheme,antennas,seed,objective\n");
        const std::string src =
            join_path(results_dir, timing ? "timings.csv" : "results.csv");
        for (const auto& row : read_csv(src)) {
            if (row.front() == "scheme") continue;
            if (!scheme_filter.empty() && row.front() != scheme_filter) continue;
            out << row.at(0) << ',' << row.at(1) << ',' << row.at(5) << ',' << row.at(6)
                << '\n';
            ++rows;
        }
    } else {  // loss-vs-round
        out << "scheme,round,loss,bound\n";
        std::map<std::string, double> bound_by_scheme;
        const std::string bounds_path = join_path(results_dir, "bounds.json");
        if (fs::exists(bounds_path)) {
            for (const json& rep : json::parse(read_file(bounds_path)))
                bound_by_scheme[rep.at("scheme").get<std::string>()] =
                    rep.at("bound").get<double>();
        }
        for (const auto& row : read_csv(join_path(results_dir, "fl_summary.csv"))) {
            if (row.front() == "round") continue;
            const std::string scheme = row.at(4);
            if (!scheme_filter.empty() && scheme != scheme_filter) continue;
            const auto it = bound_by_scheme.find(scheme);
            out << scheme << ',' << row.at(0) << ',' << row.at(1) << ','
                << (it == bound_by_scheme.end() ? "nan" : fmt_double(it->second)) << '\n';
            ++rows;
        }
    }
    if (rows == 0)
        throw ConfigError("emit_plot_data: no rows match kind '" + kind + "'" +
                          (scheme_filter.empty() ? "" : " scheme '" + scheme_filter + "'") +
                          " in " + results_dir);
    write_file(join_path(join_path(results_dir, "plots"), kind + ".csv"), out.str());
}

} // namespace umaircomp::experiment
