#include "umaircomp/pam.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "umaircomp/exec.hpp"
#include "umaircomp/io.hpp"

namespace umaircomp::pam {

namespace {

using Clock = std::chrono::steady_clock;

long long ns_since(Clock::time_point t0) {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count();
}

bool all_finite(const CMat& m) {
    for (int c = 0; c < m.cols(); ++c)
        for (int r = 0; r < m.rows(); ++r)
            if (!std::isfinite(m(r, c).real()) || !std::isfinite(m(r, c).imag())) return false;
    return true;
}

bool all_finite(const CVec& v) {
    for (const cplx& x : v)
        if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
    return true;
}

double max_unit_modulus_violation(const CMat& f) {
    double worst = 0.0;
    for (int c = 0; c < f.cols(); ++c)
        for (int r = 0; r < f.rows(); ++r)
            worst = std::max(worst, std::abs(std::abs(f(r, c)) - 1.0));
    return worst;
}

double frob2_diff(const CMat& a, const CMat& b) {
    double s = 0.0;
    for (int c = 0; c < a.cols(); ++c)
        for (int r = 0; r < a.rows(); ++r) s += std::norm(a(r, c) - b(r, c));
    return s;
}

} // namespace

CMat effective_gains(const CMat& server, const CVec& rx, const ChannelSet& ch,
                     const SystemConfig& cfg) {
    CMat gains(cfg.users, cfg.users);
    const double work = static_cast<double>(cfg.antennas) * (cfg.antennas + cfg.users);
    par_for_work(cfg.users, work, [&](int k) {
        CVec grow = matvec_adj(server, ch.downlink.col_vec(k));  // (g_k^H F)^H
        for (int j = 0; j < cfg.users; ++j) {
            const cplx* h = ch.uplink.col(j);
            cplx s = 0.0;
            for (int n = 0; n < cfg.antennas; ++n)
                s += std::conj(grow[static_cast<std::size_t>(n)]) * h[n];
            gains(k, j) = rx[static_cast<std::size_t>(k)] * s;
        }
    });
    return gains;
}

void PamOptions::validate() const {
    if (!(penalty > 0.0)) throw ConfigError("pam penalty must be > 0");
    if (outer_iters < 1) throw ConfigError("pam outer_iters must be >= 1");
    if (inner_f_iters < 1) throw ConfigError("pam inner_f_iters must be >= 1");
    if (inner_t_iters < 1) throw ConfigError("pam inner_t_iters must be >= 1");
}

FBlockContext make_f_block_context(const CVec& rx, const CVec& tx, const ChannelSet& ch,
                                   const SystemConfig& cfg, double rho) {
    const int k_users = cfg.users;
    const int n = cfg.antennas;
    FBlockContext ctx;
    ctx.rho = rho;
    ctx.gains = CMat(k_users, k_users);
    ctx.g_norm2.resize(static_cast<std::size_t>(k_users));
    ctx.rhs_const.resize(static_cast<std::size_t>(k_users));
    ctx.w_factor.resize(static_cast<std::size_t>(k_users));
    for (int k = 0; k < k_users; ++k)
        for (int j = 0; j < k_users; ++j)
            ctx.gains(k, j) = rx[static_cast<std::size_t>(k)] * tx[static_cast<std::size_t>(j)];

    const double factor_work = static_cast<double>(n) * n * (n / 3.0 + k_users);
    par_for_work(k_users, factor_work, [&](int k) {
        const CVec g = ch.downlink.col_vec(k);
        const double g2 = norm2(g);
        ctx.g_norm2[static_cast<std::size_t>(k)] = g2;

        CVec rhs(static_cast<std::size_t>(n), cplx{0.0});
        CMat w(n, n);
        const double ridge = rho / k_users +
                             g2 * cfg.server_noise * std::norm(rx[static_cast<std::size_t>(k)]);
        for (int i = 0; i < n; ++i) w(i, i) = ridge;
        for (int j = 0; j < k_users; ++j) {
            const cplx d = ctx.gains(k, j);
            const double d2 = std::norm(d);
            const CVec h = ch.uplink.col_vec(j);
            const cplx coef = d * cfg.weights[static_cast<std::size_t>(j)];
            for (int i = 0; i < n; ++i) {
                rhs[static_cast<std::size_t>(i)] += g2 * coef * h[static_cast<std::size_t>(i)];
                for (int l = 0; l < n; ++l)
                    w(i, l) += g2 * d2 * h[static_cast<std::size_t>(i)] *
                               std::conj(h[static_cast<std::size_t>(l)]);
            }
        }
        ctx.rhs_const[static_cast<std::size_t>(k)] = std::move(rhs);
        ctx.w_factor[static_cast<std::size_t>(k)] = std::make_shared<CholeskyC>(std::move(w));
    });
    return ctx;
}

CMat update_u(const PamState& state, const FBlockContext& ctx, const ChannelSet& ch,
              const SystemConfig& cfg, int user) {
    const int n = cfg.antennas;
    const std::size_t uk = static_cast<std::size_t>(user);
    const CVec g = ch.downlink.col_vec(user);
    const double rho_k = ctx.rho / cfg.users;

    // v = (rho/K) F^H g_k + rhs_const_k ; W_k pi = v
    CVec v = matvec_adj(state.f, g);
    for (int i = 0; i < n; ++i)
        v[static_cast<std::size_t>(i)] = rho_k * v[static_cast<std::size_t>(i)] +
                                         ctx.rhs_const[uk][static_cast<std::size_t>(i)];
    const CVec pi = ctx.w_factor[uk]->solve(v);

    // psi = sum_j (d_kj alpha_j - |d_kj|^2 h_j^H pi) h_j - sigma_b^2 |r_k|^2 pi
    CVec psi(static_cast<std::size_t>(n), cplx{0.0});
    for (int j = 0; j < cfg.users; ++j) {
        const cplx d = ctx.gains(user, j);
        const CVec h = ch.uplink.col_vec(j);
        const cplx coef = d * cfg.weights[static_cast<std::size_t>(j)] - std::norm(d) * inner(h, pi);
        for (int i = 0; i < n; ++i)
            psi[static_cast<std::size_t>(i)] += coef * h[static_cast<std::size_t>(i)];
    }
    const double noise = cfg.server_noise * std::norm(state.rx[uk]);
    for (int i = 0; i < n; ++i)
        psi[static_cast<std::size_t>(i)] -= noise * pi[static_cast<std::size_t>(i)];

    // u_k = f + (K/rho) g_k psi^H
    CMat u = state.f;
    const double scale = cfg.users / ctx.rho;
    for (int c = 0; c < n; ++c) {
        const cplx pc = scale * std::conj(psi[static_cast<std::size_t>(c)]);
        for (int r = 0; r < n; ++r) u(r, c) += g[static_cast<std::size_t>(r)] * pc;
    }
    return u;
}

CMat update_f(const PamState& state, bool unit_modulus) {
    const int n = state.f.rows();
    const int k_users = static_cast<int>(state.u.size());
    CMat mean(n, n);
    for (const CMat& u : state.u)
        for (int c = 0; c < n; ++c)
            for (int r = 0; r < n; ++r) mean(r, c) += u(r, c);
    const double inv_k = 1.0 / k_users;
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r) mean(r, c) *= inv_k;
    if (!unit_modulus) return mean;
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r) mean(r, c) = 0.5 * (mean(r, c) + state.z(r, c));
    return mean;
}

CMat update_z(const PamState& state) { return unit_modulus_projection(state.f); }

CMat update_xi(const CVec& tx, const CMat& gains, const std::vector<double>& weights,
               double rho) {
    const int k_users = gains.rows();
    CMat xi(k_users, k_users);
    par_for_work(k_users * k_users, 16.0, [&](int idx) {
        const int k = idx / k_users;
        const int j = idx % k_users;
        const cplx g = gains(k, j);
        xi(k, j) = (std::conj(g) * weights[static_cast<std::size_t>(j)] +
                    rho * tx[static_cast<std::size_t>(j)]) /
                   (std::norm(g) + rho);
    });
    return xi;
}

CVec update_t(const CMat& xi, double max_tx_power) {
    const int k_users = xi.rows();
    CVec t(static_cast<std::size_t>(k_users));
    par_for_work(k_users, 8.0 * k_users, [&](int j) {
        cplx mean = 0.0;
        for (int k = 0; k < k_users; ++k) mean += xi(k, j);
        mean /= static_cast<double>(k_users);
        t[static_cast<std::size_t>(j)] = power_ball_projection(mean, max_tx_power);
    });
    return t;
}

cplx power_ball_projection(cplx value, double max_power) {
    const double p = std::norm(value);
    if (p <= max_power) return value;
    return value * std::sqrt(max_power / p);
}

double f_block_penalized_objective(const PamState& state, const FBlockContext& ctx,
                                   const ChannelSet& ch, const SystemConfig& cfg,
                                   bool unit_modulus) {
    const int k_users = cfg.users;
    double penalty = 0.0;
    for (int k = 0; k < k_users; ++k)
        penalty += frob2_diff(state.u[static_cast<std::size_t>(k)], state.f) / k_users;
    if (unit_modulus) penalty += frob2_diff(state.z, state.f);

    std::vector<double> data(static_cast<std::size_t>(k_users), 0.0);
    const double work = static_cast<double>(cfg.antennas) * (2.0 * cfg.antennas + k_users);
    par_for_work(k_users, work, [&](int k) {
        const CMat& u = state.u[static_cast<std::size_t>(k)];
        CVec grow = matvec_adj(u, ch.downlink.col_vec(k));  // (g_k^H U_k)^H
        double term = 0.0;
        for (int j = 0; j < k_users; ++j) {
            const cplx* h = ch.uplink.col(j);
            cplx s = 0.0;
            for (int n = 0; n < cfg.antennas; ++n)
                s += std::conj(grow[static_cast<std::size_t>(n)]) * h[n];
            term += std::norm(ctx.gains(k, j) * s - cfg.weights[static_cast<std::size_t>(j)]);
        }
        term += cfg.server_noise * std::norm(state.rx[static_cast<std::size_t>(k)]) * norm2(grow);
        data[static_cast<std::size_t>(k)] = term;
    });
    double total = ctx.rho * penalty;
    for (double d : data) total += d;
    return total;
}

double t_block_penalized_objective(const CMat& xi, const CVec& tx, const CMat& gains,
                                   const std::vector<double>& weights, double rho) {
    const int k_users = gains.rows();
    double penalty = 0.0;
    double data = 0.0;
    for (int k = 0; k < k_users; ++k) {
        for (int j = 0; j < k_users; ++j) {
            penalty += std::norm(xi(k, j) - tx[static_cast<std::size_t>(j)]);
            data += std::norm(gains(k, j) * xi(k, j) - weights[static_cast<std::size_t>(j)]);
        }
    }
    return rho * penalty + data;
}

PamResult pam_solve(const ChannelSet& ch, const SystemConfig& cfg, const PamOptions& opts,
                    const TransceiverDesign* init) {
    cfg.validate();
    ch.require_dims(cfg);
    opts.validate();
    const int n = cfg.antennas;
    const int k_users = cfg.users;

    TransceiverDesign design;
    design.structure = opts.unit_modulus ? Structure::fully_connected
                                         : Structure::unconstrained_digital;
    if (init != nullptr) {
        design.server = init->server;
        design.user_tx = init->user_tx;
        design.user_rx = init->user_rx;
        TransceiverDesign probe = *init;
        probe.structure = design.structure;
        const FeasibilityReport rep = check_feasibility(probe, cfg);
        if (!rep.ok) throw ConfigError("pam_solve: provided initial design is infeasible");
    } else {
        design.server = CMat(n, n, cplx{1.0, 0.0});
        design.user_tx.assign(static_cast<std::size_t>(k_users),
                              cplx{std::sqrt(cfg.max_tx_power), 0.0});
        design.user_rx = optimal_receivers(design.server, design.user_tx, ch, cfg).rx;
    }

    PamResult result;
    PamDiagnostics& diag = result.diag;
    double rho = opts.penalty;
    double prev_objective = normalized_max_mse(design, ch, cfg).value;

    for (int outer = 0; outer < opts.outer_iters; ++outer) {
        // --- F block -------------------------------------------------------
        auto t0 = Clock::now();
        const FBlockContext ctx = make_f_block_context(design.user_rx, design.user_tx, ch, cfg, rho);
        PamState state;
        state.f = design.server;
        state.z = design.server;
        state.u.assign(static_cast<std::size_t>(k_users), design.server);
        state.tx = design.user_tx;
        state.rx = design.user_rx;

        std::vector<double> f_trace;
        f_trace.reserve(static_cast<std::size_t>(opts.inner_f_iters) + 1);
        f_trace.push_back(f_block_penalized_objective(state, ctx, ch, cfg, opts.unit_modulus));
        for (int m = 0; m < opts.inner_f_iters; ++m) {
            std::vector<CMat> next_u(static_cast<std::size_t>(k_users));
            const double sweep_work = static_cast<double>(n) * n * (k_users + 6.0);
            par_for_work(k_users, sweep_work, [&](int k) {
                next_u[static_cast<std::size_t>(k)] = update_u(state, ctx, ch, cfg, k);
            });
            state.u = std::move(next_u);
            state.f = update_f(state, opts.unit_modulus);
            if (opts.unit_modulus) state.z = update_z(state);
            f_trace.push_back(f_block_penalized_objective(state, ctx, ch, cfg, opts.unit_modulus));
        }
        diag.f_penalized.push_back(std::move(f_trace));
        design.server = opts.unit_modulus ? state.z : state.f;
        if (!all_finite(design.server))
            throw SolverError("pam_solve: non-finite server matrix at outer iteration " +
                              std::to_string(outer));
        diag.rows.push_back({outer, 'F', normalized_max_mse(design, ch, cfg).value,
                             max_unit_modulus_violation(design.server), ns_since(t0)});

        // --- r block ---------------------------------------------------------
        t0 = Clock::now();
        const ReceiverUpdate ru = optimal_receivers(design.server, design.user_tx, ch, cfg);
        design.user_rx = ru.rx;
        for (bool d : ru.degenerate) diag.receiver_degenerate = diag.receiver_degenerate || d;
        if (!all_finite(design.user_rx))
            throw SolverError("pam_solve: non-finite receivers at outer iteration " +
                              std::to_string(outer));
        diag.rows.push_back({outer, 'r', normalized_max_mse(design, ch, cfg).value,
                             max_unit_modulus_violation(design.server), ns_since(t0)});

        // --- t block ---------------------------------------------------------
        t0 = Clock::now();
        const CMat gains = effective_gains(design.server, design.user_rx, ch, cfg);
        CMat xi(k_users, k_users);
        for (int k = 0; k < k_users; ++k)
            for (int j = 0; j < k_users; ++j) xi(k, j) = design.user_tx[static_cast<std::size_t>(j)];
        CVec tx = design.user_tx;
        std::vector<double> t_trace;
        t_trace.reserve(static_cast<std::size_t>(opts.inner_t_iters) + 1);
        t_trace.push_back(t_block_penalized_objective(xi, tx, gains, cfg.weights, rho));
        for (int q = 0; q < opts.inner_t_iters; ++q) {
            xi = update_xi(tx, gains, cfg.weights, rho);
            tx = update_t(xi, cfg.max_tx_power);
            t_trace.push_back(t_block_penalized_objective(xi, tx, gains, cfg.weights, rho));
        }
        diag.t_penalized.push_back(std::move(t_trace));
        design.user_tx = tx;
        if (!all_finite(design.user_tx))
            throw SolverError("pam_solve: non-finite transmitters at outer iteration " +
                              std::to_string(outer));
        const double objective = normalized_max_mse(design, ch, cfg).value;
        diag.rows.push_back({outer, 't', objective,
                             max_unit_modulus_violation(design.server), ns_since(t0)});
        diag.objective_per_outer.push_back(objective);
        diag.outer_iterations = outer + 1;

        if (opts.penalty_continuation) rho *= 10.0;
        const double denom = std::max(1.0, std::abs(prev_objective));
        if (std::abs(prev_objective - objective) < opts.rel_tol * denom) break;
        prev_objective = objective;
    }

    result.design = std::move(design);
    return result;
}

std::string diagnostics_csv(const PamDiagnostics& diag) {
    std::ostringstream out;
    out << "outer_iter,block,objective,max_unit_modulus_violation,elapsed_ns\n";
    for (const auto& row : diag.rows) {
        out << row.outer << ',' << row.block << ',' << fmt_double(row.objective) << ','
            << fmt_double(row.unit_modulus_violation) << ',' << row.elapsed_ns << '\n';
    }
    return out.str();
}

} // namespace umaircomp::pam
