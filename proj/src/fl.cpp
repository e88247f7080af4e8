#include "umaircomp/fl.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "umaircomp/exec.hpp"
#include "umaircomp/io.hpp"
#include "umaircomp/rng.hpp"

namespace umaircomp::fl {

namespace {

constexpr std::uint64_t kChannelTag = 0x6c656e6eULL;
constexpr std::uint64_t kNoiseTag = 0x6e6f6973ULL;
constexpr std::uint64_t kUplinkTag = 0x75ULL;
constexpr std::uint64_t kDownlinkTag = 0x64ULL;

std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return mix64(mix64(seed ^ mix64(a)) + b);
}

RVec sub(const RVec& a, const RVec& b) {
    RVec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

} // namespace

double QuadraticTask::user_loss(int user, const RVec& x) const {
    const RMat& a = data[static_cast<std::size_t>(user)];
    const RVec& y = targets[static_cast<std::size_t>(user)];
    RVec res = matvec(a, x);
    for (std::size_t i = 0; i < res.size(); ++i) res[i] -= y[i];
    return 0.5 * norm2(res) / a.rows() + 0.5 * ridge * norm2(x);
}

RVec QuadraticTask::user_gradient(int user, const RVec& x) const {
    const RMat& a = data[static_cast<std::size_t>(user)];
    const RVec& y = targets[static_cast<std::size_t>(user)];
    RVec res = matvec(a, x);
    for (std::size_t i = 0; i < res.size(); ++i) res[i] -= y[i];
    RVec grad = matvec_t(a, res);
    const double inv = 1.0 / a.rows();
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = grad[i] * inv + ridge * x[i];
    return grad;
}

double QuadraticTask::global_loss(const RVec& x) const {
    double loss = 0.0;
    for (int k = 0; k < users(); ++k)
        loss += weights[static_cast<std::size_t>(k)] * user_loss(k, x);
    return loss;
}

RVec QuadraticTask::global_gradient(const RVec& x) const {
    RVec grad(static_cast<std::size_t>(dim), 0.0);
    for (int k = 0; k < users(); ++k) {
        const RVec g = user_gradient(k, x);
        const double w = weights[static_cast<std::size_t>(k)];
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += w * g[i];
    }
    return grad;
}

void QuadraticTask::finalize() {
    const int k_users = users();
    if (dim % 2 != 0) throw ConfigError("task dim must be even (S = M/2)");
    double total = 0.0;
    for (const RMat& a : data) total += a.rows();
    weights.resize(static_cast<std::size_t>(k_users));
    for (int k = 0; k < k_users; ++k)
        weights[static_cast<std::size_t>(k)] = data[static_cast<std::size_t>(k)].rows() / total;

    hessian = RMat(dim, dim);
    RVec lin(static_cast<std::size_t>(dim), 0.0);
    for (int k = 0; k < k_users; ++k) {
        const RMat& a = data[static_cast<std::size_t>(k)];
        const RMat g = gram_t(a);
        for (int c = 0; c < dim; ++c)
            for (int r = 0; r < dim; ++r) hessian(r, c) += g(r, c) / total;
        const RVec aty = matvec_t(a, targets[static_cast<std::size_t>(k)]);
        for (std::size_t i = 0; i < lin.size(); ++i) lin[i] += aty[i] / total;
    }
    for (int i = 0; i < dim; ++i) hessian(i, i) += ridge;

    const std::vector<double> eig = symmetric_eigenvalues(hessian);
    strong_convexity = eig.front();
    smoothness = eig.back();
    if (!(strong_convexity > 0.0))
        throw ConfigError("task Hessian is not positive definite; increase ridge or samples");

    optimum = CholeskyR(hessian).solve(lin);
    optimum_loss = global_loss(optimum);

    user_optimum_loss.resize(static_cast<std::size_t>(k_users));
    user_optimum.resize(static_cast<std::size_t>(k_users));
    for (int k = 0; k < k_users; ++k) {
        const RMat& a = data[static_cast<std::size_t>(k)];
        RMat hk = gram_t(a);
        for (int c = 0; c < dim; ++c)
            for (int r = 0; r < dim; ++r) hk(r, c) /= a.rows();
        for (int i = 0; i < dim; ++i) hk(i, i) += ridge;
        RVec rhs = matvec_t(a, targets[static_cast<std::size_t>(k)]);
        for (double& v : rhs) v /= a.rows();
        user_optimum[static_cast<std::size_t>(k)] = CholeskyR(hk).solve(rhs);
        user_optimum_loss[static_cast<std::size_t>(k)] =
            user_loss(k, user_optimum[static_cast<std::size_t>(k)]);
    }
    heterogeneity = optimum_loss;
    for (int k = 0; k < k_users; ++k)
        heterogeneity -= weights[static_cast<std::size_t>(k)] *
                         user_optimum_loss[static_cast<std::size_t>(k)];
}

QuadraticTask make_task_impl(int users, int dim, int samples, double ridge,
                                      double shift, std::uint64_t seed,
                                      bool identical_users) {
    if (users < 1) throw ConfigError("task needs at least one user");
    if (samples < 1) throw ConfigError("task needs at least one sample per user");
    QuadraticTask task;
    task.ridge = ridge;
    task.dim = dim;
    RandomStream rs = RandomStream(seed).fork(0x7461736bULL);

    RVec w0(static_cast<std::size_t>(dim));
    for (double& v : w0) v = rs.next_gaussian(1.0);

    const int groups = identical_users ? 1 : users;
    for (int k = 0; k < groups; ++k) {
        RVec wk = w0;
        for (double& v : wk) v += shift * rs.next_gaussian(1.0);
        RMat a(samples, dim);
        for (int c = 0; c < dim; ++c)
            for (int r = 0; r < samples; ++r) a(r, c) = rs.next_gaussian(1.0);
        RVec y = matvec(a, wk);
        for (double& v : y) v += 0.1 * rs.next_gaussian(1.0);
        task.data.push_back(std::move(a));
        task.targets.push_back(std::move(y));
    }
    while (static_cast<int>(task.data.size()) < users) {
        task.data.push_back(task.data.front());
        task.targets.push_back(task.targets.front());
    }
    task.finalize();
    return task;
}

QuadraticTask make_quadratic_task(int users, int dim, int samples_per_user, double ridge,
                                  double shift, std::uint64_t seed, bool identical_users) {
    return make_task_impl(users, dim, samples_per_user, ridge, shift, seed,
                                   identical_users);
}

double StepSchedule::at(int round, int local) const {
    if (kind == Kind::constant) return eps;
    return 2.0 / (mu * (nu + static_cast<double>(round) * local_epochs + local));
}

StepSchedule StepSchedule::constant_step(double eps) {
    StepSchedule s;
    s.kind = Kind::constant;
    s.eps = eps;
    return s;
}

StepSchedule StepSchedule::inverse_time(double mu, double smoothness, int local_epochs) {
    StepSchedule s;
    s.kind = Kind::inverse_time;
    s.mu = mu;
    s.nu = std::max(8.0 * smoothness / mu, static_cast<double>(local_epochs));
    s.local_epochs = local_epochs;
    return s;
}

RVec local_gd(const RVec& x0, const QuadraticTask& task, int user, int steps, double eps) {
    return local_gd(x0, task, user, steps, StepSchedule::constant_step(eps), 0);
}

RVec local_gd(const RVec& x0, const QuadraticTask& task, int user, int steps,
              const StepSchedule& schedule, int round) {
    if (schedule.at(0, 0) <= 0.0) throw ConfigError("step size must be > 0");
    RVec x = x0;
    for (int tau = 0; tau < steps; ++tau) {
        const RVec g = task.user_gradient(user, x);
        const double eps = schedule.at(round, tau);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] -= eps * g[i];
    }
    return x;
}

CVec modulate(const RVec& x, cplx tx, double eta) {
    if (!(eta > 0.0)) throw ConfigError("modulate: eta must be > 0");
    if (x.size() % 2 != 0) throw DimensionError("modulate: parameter length must be even");
    const std::size_t s = x.size() / 2;
    CVec sym(s);
    const double scale = 1.0 / std::sqrt(2.0 * eta);
    for (std::size_t m = 0; m < s; ++m)
        sym[m] = tx * cplx{x[2 * m] * scale, x[2 * m + 1] * scale};
    return sym;
}

RVec demodulate(const CVec& y, cplx rx, double eta) {
    if (!(eta > 0.0)) throw ConfigError("demodulate: eta must be > 0");
    RVec x(2 * y.size());
    const double scale = std::sqrt(2.0 * eta);
    for (std::size_t m = 0; m < y.size(); ++m) {
        const cplx v = rx * y[m];
        x[2 * m] = scale * v.real();
        x[2 * m + 1] = scale * v.imag();
    }
    return x;
}

std::vector<CVec> transmit_round(const std::vector<CVec>& symbols,
                                 const TransceiverDesign& design, const ChannelSet& ch,
                                 const SystemConfig& cfg, std::uint64_t noise_seed) {
    if (static_cast<int>(symbols.size()) != cfg.users)
        throw DimensionError("transmit_round: expected one symbol block per user");
    const int n = cfg.antennas;
    const std::size_t s = symbols.front().size();
    for (const CVec& blk : symbols)
        if (blk.size() != s) throw DimensionError("transmit_round: ragged symbol blocks");

    // R = sum_k h_k s_k^T + Z
    CMat received(n, static_cast<int>(s));
    for (int k = 0; k < cfg.users; ++k) {
        const cplx* h = ch.uplink.col(k);
        const CVec& blk = symbols[static_cast<std::size_t>(k)];
        for (int c = 0; c < static_cast<int>(s); ++c)
            for (int r = 0; r < n; ++r) received(r, c) += h[r] * blk[static_cast<std::size_t>(c)];
    }
    RandomStream base = RandomStream(noise_seed).fork(kNoiseTag);
    RandomStream up = base.fork(kUplinkTag);
    for (int c = 0; c < static_cast<int>(s); ++c)
        for (int r = 0; r < n; ++r)
            received(r, c) += up.next_complex_gaussian(cfg.server_noise);

    // Broadcast sqrt(gamma) F R, then y_k^T = g_k^H (.) + n_k^T
    const CMat fwd = matmul(design.server, received);
    const double root_gain = std::sqrt(cfg.server_gain);
    std::vector<CVec> out(static_cast<std::size_t>(cfg.users));
    const double work = static_cast<double>(s) * (n + 4.0);
    par_for_work(cfg.users, work, [&](int k) {
        RandomStream down = base.fork(kDownlinkTag, static_cast<std::uint64_t>(k));
        CVec y(s);
        const CVec g = ch.downlink.col_vec(k);
        for (int c = 0; c < static_cast<int>(s); ++c) {
            cplx val = 0.0;
            const cplx* col = fwd.col(c);
            for (int r = 0; r < n; ++r) val += std::conj(g[static_cast<std::size_t>(r)]) * col[r];
            y[static_cast<std::size_t>(c)] =
                root_gain * val + down.next_complex_gaussian(cfg.user_noise[static_cast<std::size_t>(k)]);
        }
        out[static_cast<std::size_t>(k)] = std::move(y);
    });
    return out;
}

RVec target_global(const std::vector<RVec>& local_params, const std::vector<double>& weights) {
    if (local_params.empty()) throw DimensionError("target_global: no local parameters");
    RVec theta(local_params.front().size(), 0.0);
    for (std::size_t k = 0; k < local_params.size(); ++k)
        for (std::size_t i = 0; i < theta.size(); ++i)
            theta[i] += weights[k] * local_params[k][i];
    return theta;
}

namespace {

struct RoundPlan {
    std::vector<ChannelSet> channels;
    std::vector<TransceiverDesign> designs;
};

RoundPlan make_round_plan(const SystemConfig& cfg, const std::string& scheme,
                          const baselines::SchemeOptions& sopts, int rounds,
                          std::uint64_t seed) {
    RoundPlan plan;
    plan.channels.reserve(static_cast<std::size_t>(rounds));
    plan.designs.reserve(static_cast<std::size_t>(rounds));
    const auto& registry = baselines::SchemeRegistry::instance();
    for (int i = 0; i < rounds; ++i) {
        ChannelSet ch = generate_channels(cfg, derive(seed, kChannelTag, static_cast<std::uint64_t>(i)));
        try {
            plan.designs.push_back(registry.run(scheme, ch, cfg, sopts).design);
        } catch (const Error& e) {
            throw SolverError("design solve failed at round " + std::to_string(i) + ": " +
                              e.what());
        }
        plan.channels.push_back(std::move(ch));
    }
    return plan;
}

FlHistory run_with_plan(const QuadraticTask& task, const SystemConfig& cfg,
                        const RoundPlan& plan, const FlOptions& fopts,
                        std::uint64_t noise_seed) {
    const int k_users = task.users();
    const int s = task.symbols();
    FlHistory hist;
    hist.rounds = static_cast<int>(plan.channels.size());
    hist.local_epochs = fopts.local_epochs;
    hist.schedule = fopts.schedule;
    hist.noise_seed = noise_seed;

    RVec x0 = fopts.x0;
    if (x0.empty()) x0.assign(static_cast<std::size_t>(task.dim), 0.0);
    hist.start_params = x0;
    std::vector<RVec> params(static_cast<std::size_t>(k_users), x0);

    double eta_prev = 0.0;
    for (int i = 0; i < hist.rounds; ++i) {
        const ChannelSet& ch = plan.channels[static_cast<std::size_t>(i)];
        const TransceiverDesign& design = plan.designs[static_cast<std::size_t>(i)];
        FlRound round;
        round.loss_start.resize(static_cast<std::size_t>(k_users));
        for (int k = 0; k < k_users; ++k)
            round.loss_start[static_cast<std::size_t>(k)] =
                task.global_loss(params[static_cast<std::size_t>(k)]);

        std::vector<RVec> trained(static_cast<std::size_t>(k_users));
        const double gd_work = 4.0 * fopts.local_epochs *
                               task.data.front().rows() * task.dim;
        par_for_work(k_users, gd_work, [&](int k) {
            trained[static_cast<std::size_t>(k)] =
                local_gd(params[static_cast<std::size_t>(k)], task, k, fopts.local_epochs,
                         fopts.schedule, i);
        });

        double eta_current = 0.0;
        for (int k = 0; k < k_users; ++k)
            eta_current += norm2(trained[static_cast<std::size_t>(k)]) / task.dim;
        eta_current /= k_users;
        // eta_lag mimics the protocol where users reuse the previous round's
        // scaling; round 0 has nothing earlier and uses its own.
        const double eta = (fopts.eta_lag && i > 0) ? eta_prev : eta_current;
        eta_prev = eta_current;
        if (!(eta > 0.0))
            throw SolverError("eta degenerate (all-zero parameters) at round " +
                              std::to_string(i));
        round.eta = eta;

        std::vector<CVec> symbols(static_cast<std::size_t>(k_users));
        par_for_work(k_users, 4.0 * task.dim, [&](int k) {
            symbols[static_cast<std::size_t>(k)] =
                modulate(trained[static_cast<std::size_t>(k)],
                         design.user_tx[static_cast<std::size_t>(k)], eta);
        });
        const std::vector<CVec> received = transmit_round(
            symbols, design, ch, cfg, derive(noise_seed, kNoiseTag, static_cast<std::uint64_t>(i)));

        round.target = target_global(trained, task.weights);
        round.analytic_mse.resize(static_cast<std::size_t>(k_users));
        round.realized_err.resize(static_cast<std::size_t>(k_users));
        std::vector<RVec> next(static_cast<std::size_t>(k_users));
        const double demod_work =
            static_cast<double>(s) * (cfg.antennas + 4.0) + 4.0 * task.dim;
        par_for_work(k_users, demod_work, [&](int k) {
            next[static_cast<std::size_t>(k)] =
                demodulate(received[static_cast<std::size_t>(k)],
                           design.user_rx[static_cast<std::size_t>(k)], eta);
            round.analytic_mse[static_cast<std::size_t>(k)] =
                mse_per_user(design, ch, cfg, k, eta, s);
            round.realized_err[static_cast<std::size_t>(k)] =
                norm2(sub(next[static_cast<std::size_t>(k)], round.target));
        });
        for (int k = 0; k < k_users; ++k) {
            round.max_analytic_mse =
                std::max(round.max_analytic_mse, round.analytic_mse[static_cast<std::size_t>(k)]);
            round.max_realized_err =
                std::max(round.max_realized_err, round.realized_err[static_cast<std::size_t>(k)]);
        }
        params = std::move(next);
        hist.round.push_back(std::move(round));
    }

    hist.final_params = params;
    hist.final_loss.resize(static_cast<std::size_t>(k_users));
    for (int k = 0; k < k_users; ++k)
        hist.final_loss[static_cast<std::size_t>(k)] =
            task.global_loss(params[static_cast<std::size_t>(k)]);
    return hist;
}

} // namespace

FlHistory run_federated(const QuadraticTask& task, const SystemConfig& cfg,
                        const std::string& scheme, const baselines::SchemeOptions& sopts,
                        const FlOptions& fopts, std::uint64_t seed) {
    cfg.validate();
    if (fopts.rounds < 1) throw ConfigError("rounds must be >= 1");
    if (cfg.users != task.users())
        throw DimensionError("task has " + std::to_string(task.users()) +
                             " users, config has " + std::to_string(cfg.users));
    const RoundPlan plan = make_round_plan(cfg, scheme, sopts, fopts.rounds, seed);
    FlHistory hist = run_with_plan(task, cfg, plan, fopts, derive(seed, kNoiseTag, 0));
    hist.scheme = scheme;
    hist.seed = seed;
    return hist;
}

std::vector<FlHistory> run_federated_replicas(const QuadraticTask& task,
                                              const SystemConfig& cfg,
                                              const std::string& scheme,
                                              const baselines::SchemeOptions& sopts,
                                              const FlOptions& fopts, std::uint64_t seed,
                                              int replicas) {
    cfg.validate();
    if (fopts.rounds < 1) throw ConfigError("rounds must be >= 1");
    if (replicas < 1) throw ConfigError("replicas must be >= 1");
    const RoundPlan plan = make_round_plan(cfg, scheme, sopts, fopts.rounds, seed);
    std::vector<FlHistory> out(static_cast<std::size_t>(replicas));
    par_for(replicas, [&](int r) {
        FlHistory h = run_with_plan(task, cfg, plan, fopts,
                                    derive(seed, kNoiseTag, static_cast<std::uint64_t>(r)));
        h.scheme = scheme;
        h.seed = seed;
        out[static_cast<std::size_t>(r)] = std::move(h);
    });
    return out;
}

double estimate_gradient_bound(const QuadraticTask& task, const FlOptions& fopts) {
    RVec x0 = fopts.x0;
    if (x0.empty()) x0.assign(static_cast<std::size_t>(task.dim), 0.0);
    const int k_users = task.users();

    // Ideal-channel dry run: every user receives the target exactly.
    double max_dev2 = norm2(sub(x0, task.optimum));
    std::vector<RVec> params(static_cast<std::size_t>(k_users), x0);
    for (int i = 0; i < fopts.rounds; ++i) {
        std::vector<RVec> trained(static_cast<std::size_t>(k_users));
        for (int k = 0; k < k_users; ++k) {
            RVec x = params[static_cast<std::size_t>(k)];
            for (int tau = 0; tau < fopts.local_epochs; ++tau) {
                const RVec g = task.user_gradient(k, x);
                const double eps = fopts.schedule.at(i, tau);
                for (std::size_t idx = 0; idx < x.size(); ++idx) x[idx] -= eps * g[idx];
                max_dev2 = std::max(max_dev2, norm2(sub(x, task.optimum)));
            }
            trained[static_cast<std::size_t>(k)] = std::move(x);
        }
        const RVec theta = target_global(trained, task.weights);
        max_dev2 = std::max(max_dev2, norm2(sub(theta, task.optimum)));
        params.assign(static_cast<std::size_t>(k_users), theta);
    }

    const double radius = 2.0 * std::sqrt(max_dev2);
    double bound = 0.0;
    for (int k = 0; k < k_users; ++k) {
        const RMat& a = task.data[static_cast<std::size_t>(k)];
        RMat hk = gram_t(a);
        for (int c = 0; c < task.dim; ++c)
            for (int r = 0; r < task.dim; ++r) hk(r, c) /= a.rows();
        for (int i = 0; i < task.dim; ++i) hk(i, i) += task.ridge;
        const double lmax = symmetric_eigenvalues(std::move(hk)).back();
        const double dist = norm(sub(task.optimum, task.user_optimum[static_cast<std::size_t>(k)]));
        bound = std::max(bound, lmax * (radius + dist));
    }
    return bound;
}

std::string FlHistory::to_jsonl() const {
    std::ostringstream out;
    nlohmann::json meta;
    meta["type"] = "meta";
    meta["scheme"] = scheme;
    meta["seed"] = seed;
    meta["noise_seed"] = noise_seed;
    meta["rounds"] = rounds;
    meta["local_epochs"] = local_epochs;
    meta["schedule_kind"] =
        schedule.kind == StepSchedule::Kind::constant ? "constant" : "inverse_time";
    meta["schedule_eps"] = schedule.eps;
    meta["schedule_mu"] = schedule.mu;
    meta["schedule_nu"] = schedule.nu;
    out << meta.dump() << '\n';
    for (std::size_t i = 0; i < round.size(); ++i) {
        const FlRound& r = round[i];
        nlohmann::json j;
        j["type"] = "round";
        j["round"] = i;
        j["eta"] = r.eta;
        j["target"] = r.target;
        j["analytic_mse"] = r.analytic_mse;
        j["realized_err"] = r.realized_err;
        j["loss_start"] = r.loss_start;
        out << j.dump() << '\n';
    }
    nlohmann::json fin;
    fin["type"] = "final";
    fin["start_params"] = start_params;
    fin["final_loss"] = final_loss;
    fin["final_params"] = final_params;
    out << fin.dump() << '\n';
    return out.str();
}

FlHistory FlHistory::from_jsonl(const std::string& text) {
    FlHistory hist;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const nlohmann::json j = nlohmann::json::parse(line);
        const std::string type = j.at("type").get<std::string>();
        if (type == "meta") {
            hist.scheme = j.at("scheme").get<std::string>();
            hist.seed = j.at("seed").get<std::uint64_t>();
            hist.noise_seed = j.at("noise_seed").get<std::uint64_t>();
            hist.rounds = j.at("rounds").get<int>();
            hist.local_epochs = j.at("local_epochs").get<int>();
            hist.schedule.kind = j.at("schedule_kind").get<std::string>() == "constant"
                                     ? StepSchedule::Kind::constant
                                     : StepSchedule::Kind::inverse_time;
            hist.schedule.eps = j.at("schedule_eps").get<double>();
            hist.schedule.mu = j.at("schedule_mu").get<double>();
            hist.schedule.nu = j.at("schedule_nu").get<double>();
            hist.schedule.local_epochs = hist.local_epochs;
        } else if (type == "round") {
            FlRound r;
            r.eta = j.at("eta").get<double>();
            r.target = j.at("target").get<RVec>();
            r.analytic_mse = j.at("analytic_mse").get<std::vector<double>>();
            r.realized_err = j.at("realized_err").get<std::vector<double>>();
            r.loss_start = j.at("loss_start").get<std::vector<double>>();
            for (double m : r.analytic_mse) r.max_analytic_mse = std::max(r.max_analytic_mse, m);
            for (double e : r.realized_err) r.max_realized_err = std::max(r.max_realized_err, e);
            hist.round.push_back(std::move(r));
        } else if (type == "final") {
            hist.start_params = j.at("start_params").get<RVec>();
            hist.final_loss = j.at("final_loss").get<std::vector<double>>();
            hist.final_params = j.at("final_params").get<std::vector<RVec>>();
        }
    }
    return hist;
}

std::string FlHistory::summary_csv() const {
    std::ostringstream out;
    out << "round,loss,max_mse_analytic,max_err_realized,scheme,seed\n";
    for (std::size_t i = 0; i < round.size(); ++i) {
        double worst_loss = 0.0;
        for (double l : round[i].loss_start) worst_loss = std::max(worst_loss, l);
        out << i << ',' << fmt_double(worst_loss) << ','
            << fmt_double(round[i].max_analytic_mse) << ','
            << fmt_double(round[i].max_realized_err) << ',' << scheme << ',' << seed << '\n';
    }
    return out.str();
}

} // namespace umaircomp::fl
