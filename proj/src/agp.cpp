#include "umaircomp/agp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "umaircomp/exec.hpp"
#include "umaircomp/io.hpp"
#include "umaircomp/pam.hpp"
#include "umaircomp/rng.hpp"

namespace umaircomp::agp {

namespace {

using Clock = std::chrono::steady_clock;

long long ns_since(Clock::time_point t0) {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count();
}

void require_positive_noise(const SystemConfig& cfg) {
    for (double s : cfg.user_noise)
        if (!(s > 0.0))
            throw ConfigError("agp requires positive user noise powers (max-min objective)");
}

double entropy(const RVec& b) {
    double h = 0.0;
    for (double x : b)
        if (x > 0.0) h -= x * std::log(x);
    return h;
}

double max_min_objective(const CMat& downlink, const std::vector<double>& user_noise,
                         const CVec& v) {
    double worst = 0.0;
    for (int k = 0; k < downlink.cols(); ++k) {
        const double p = std::norm(inner(downlink.col_vec(k), v));
        const double val = p > 0.0 ? user_noise[static_cast<std::size_t>(k)] / p
                                   : std::numeric_limits<double>::infinity();
        worst = std::max(worst, val);
    }
    return worst;
}

} // namespace

void AgpOptions::validate() const {
    if (!(inner_eps > 0.0)) throw ConfigError("agp inner_eps must be > 0");
    if (max_fixed_point_iters < 1) throw ConfigError("agp max_fixed_point_iters must be >= 1");
    if (max_inner_iters < 1) throw ConfigError("agp max_inner_iters must be >= 1");
    if (!(fixed_point_tol > 0.0)) throw ConfigError("agp fixed_point_tol must be > 0");
    if (w_refine_iters < 0) throw ConfigError("agp w_refine_iters must be >= 0");
}

WResult solve_w(const ChannelSet& ch, const SystemConfig& cfg, int refine_iters,
                double refine_tol) {
    cfg.validate();
    const int n = cfg.antennas;
    const int k_users = cfg.users;
    const CMat& h = ch.uplink;
    for (int k = 0; k < k_users; ++k)
        if (norm2(h.col_vec(k)) == 0.0)
            throw DegenerateError("solve_w: uplink channel of user " + std::to_string(k) +
                                  " is zero");

    RVec d(static_cast<std::size_t>(k_users));
    for (int k = 0; k < k_users; ++k)
        d[static_cast<std::size_t>(k)] =
            cfg.weights[static_cast<std::size_t>(k)] / std::sqrt(cfg.max_tx_power);

    WResult out;
    // Least-norm solution of h_k^H w = d_k: w = H (H^H H)^{-1} d.
    CMat a = gram(h);
    CVec dc(d.begin(), d.end());
    CVec coef;
    double trace = 0.0;
    for (int k = 0; k < k_users; ++k) trace += a(k, k).real();
    try {
        coef = CholeskyC(a).solve(dc);
    } catch (const SolverError&) {
        out.ridge_fallback = true;
        double ridge = 1e-12 * std::max(trace / k_users, 1e-300);
        for (int attempt = 0; attempt < 40; ++attempt) {
            CMat reg = a;
            for (int k = 0; k < k_users; ++k) reg(k, k) += ridge;
            try {
                coef = CholeskyC(std::move(reg)).solve(dc);
                break;
            } catch (const SolverError&) {
                ridge *= 10.0;
            }
        }
        if (coef.empty()) throw SolverError("solve_w: Gram matrix unsalvageable");
    }
    CVec w = matvec(h, coef);

    {
        CVec res = matvec_adj(h, w);
        for (int k = 0; k < k_users; ++k) res[static_cast<std::size_t>(k)] -= dc[static_cast<std::size_t>(k)];
        out.equality_residual = norm(res);
    }

    // Inequality repair: scale up until |h_k^H w| >= d_k for every user.
    auto repair_scale = [&](const CVec& cand) {
        double s = 1.0;
        for (int k = 0; k < k_users; ++k) {
            const double mag = std::abs(inner(h.col_vec(k), cand));
            if (mag <= 0.0) return -1.0;
            s = std::max(s, d[static_cast<std::size_t>(k)] / mag);
        }
        return s;
    };
    const double s0 = repair_scale(w);
    if (s0 < 0.0)
        throw SolverError("solve_w: least-norm direction orthogonal to a user channel; "
                          "equality residual " + fmt_double(out.equality_residual));
    if (s0 > 1.0)
        for (cplx& x : w) x *= s0;
    out.initial_norm2 = norm2(w);

    // Phase-restricted refinement: fix theta_k = angle(h_k^H w), solve the
    // convex restriction min ||w||^2 s.t. Re(e^{-j theta_k} h_k^H w) >= d_k
    // via projected gradient on its dual, accept only strict improvements.
    for (int it = 0; it < refine_iters; ++it) {
        std::vector<CVec> cdir(static_cast<std::size_t>(k_users));
        for (int k = 0; k < k_users; ++k) {
            const cplx hw = inner(h.col_vec(k), w);
            const double mag = std::abs(hw);
            const cplx phase = mag > 0.0 ? hw / mag : cplx{1.0, 0.0};
            CVec c = h.col_vec(k);
            for (cplx& x : c) x *= phase;  // c_k = e^{j theta_k} h_k, Re(c_k^H w) = |h_k^H w|
            cdir[static_cast<std::size_t>(k)] = std::move(c);
        }
        RMat m(k_users, k_users);
        for (int i = 0; i < k_users; ++i)
            for (int j = 0; j < k_users; ++j)
                m(i, j) = inner(cdir[static_cast<std::size_t>(i)], cdir[static_cast<std::size_t>(j)]).real();
        const std::vector<double> eig = symmetric_eigenvalues(m);
        const double lmax = eig.back();
        if (!(lmax > 0.0)) break;
        const double step = 1.0 / lmax;
        RVec lambda(static_cast<std::size_t>(k_users), 0.0);
        for (int t = 0; t < 1000; ++t) {
            const RVec ml = matvec(m, lambda);
            for (int k = 0; k < k_users; ++k) {
                lambda[static_cast<std::size_t>(k)] = std::max(
                    0.0, lambda[static_cast<std::size_t>(k)] +
                             step * (d[static_cast<std::size_t>(k)] -
                                     0.5 * ml[static_cast<std::size_t>(k)]));
            }
        }
        CVec cand(static_cast<std::size_t>(n), cplx{0.0});
        for (int k = 0; k < k_users; ++k)
            for (int i = 0; i < n; ++i)
                cand[static_cast<std::size_t>(i)] += 0.5 * lambda[static_cast<std::size_t>(k)] *
                                                     cdir[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
        const double sc = repair_scale(cand);
        if (sc < 0.0) break;
        if (sc > 1.0)
            for (cplx& x : cand) x *= sc;
        if (norm2(cand) < norm2(w) * (1.0 - refine_tol)) {
            w = std::move(cand);
        } else {
            break;
        }
    }
    out.refined_norm2 = norm2(w);
    out.w = std::move(w);
    return out;
}

RVec simplex_projection(const RVec& u) {
    const int k = static_cast<int>(u.size());
    if (k == 0) return {};
    for (double x : u)
        if (!std::isfinite(x)) throw ConfigError("simplex_projection: non-finite input");
    RVec sorted(u);
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    double cum = 0.0;
    double tau = 0.0;
    int delta = 0;
    for (int x = 1; x <= k; ++x) {
        cum += sorted[static_cast<std::size_t>(x - 1)];
        const double cand = (cum - 1.0) / x;
        if (cand < sorted[static_cast<std::size_t>(x - 1)]) {
            delta = x;
            tau = cand;
        }
    }
    (void)delta;
    RVec b(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) b[i] = std::max(u[i] - tau, 0.0);
    return b;
}

SmoothedEval smoothed_value_and_gradient(const RVec& b, const CMat& c, const RVec& q,
                                         double phi, double beta) {
    const int k = c.cols();
    const int n = c.rows();
    if (static_cast<int>(b.size()) != k)
        throw DimensionError("smoothed eval: b has length " + std::to_string(b.size()) +
                             ", expected " + std::to_string(k));
    if (static_cast<int>(q.size()) != k)
        throw DimensionError("smoothed eval: q has length " + std::to_string(q.size()) +
                             ", expected " + std::to_string(k));

    CVec cb(static_cast<std::size_t>(n), cplx{0.0});
    for (int j = 0; j < k; ++j) {
        const double bj = b[static_cast<std::size_t>(j)];
        if (bj == 0.0) continue;
        const cplx* col = c.col(j);
        for (int i = 0; i < n; ++i) cb[static_cast<std::size_t>(i)] += bj * col[i];
    }
    const double cb2 = norm2(cb);
    const double root = std::sqrt(phi * phi + cb2);
    if (root == 0.0)
        throw DegenerateError("smoothed objective degenerate: phi = 0 and C b = 0; "
                              "use phi > 0");

    SmoothedEval out;
    out.value = 2.0 * std::sqrt(beta) * root;
    out.grad.assign(static_cast<std::size_t>(k), 0.0);
    const double scale = 2.0 * std::sqrt(beta) / root;
    for (int j = 0; j < k; ++j) {
        const cplx chcb = inner(c.col_vec(j), cb);  // (C^H C b)_j
        out.grad[static_cast<std::size_t>(j)] =
            scale * chcb.real() - q[static_cast<std::size_t>(j)];
    }
    double qb = 0.0;
    for (int j = 0; j < k; ++j) qb += q[static_cast<std::size_t>(j)] * b[static_cast<std::size_t>(j)];
    out.value -= qb;
    return out;
}

double lipschitz_constant(const CMat& c, double phi, double beta, int users) {
    const CMat g = gram(c);
    RMat re(g.rows(), g.cols());
    for (int j = 0; j < g.cols(); ++j)
        for (int i = 0; i < g.rows(); ++i) re(i, j) = g(i, j).real();
    const std::vector<double> re_eig = symmetric_eigenvalues(std::move(re));
    const double lmax = std::max(re_eig.back(), 0.0);
    const std::vector<double> h_eig = hermitian_eigenvalues(g);
    double lmin = std::max(h_eig.front(), 0.0);
    const double lscale = std::max(h_eig.back(), 0.0);
    if (lmin <= 1e-14 * lscale) lmin = 0.0;

    const double denom = std::sqrt(phi * phi + lmin / users);
    if (denom == 0.0) {
        if (lmax == 0.0) return 0.0;  // C = 0 with phi = 0: gradient constant
        throw DegenerateError(
            "lipschitz constant infinite: phi = 0 with rank-deficient channels");
    }
    return 2.0 * std::sqrt(beta) * lmax / denom;
}

double momentum_coefficient(double prev) {
    return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * prev * prev));
}

BSolve solve_b_accelerated(const CMat& c, const RVec& q, double phi, double beta,
                           double eps, int max_iters, const RVec* warm_start) {
    const int k = c.cols();
    BSolve out;
    const double lip = lipschitz_constant(c, phi, beta, k);
    if (lip == 0.0) {
        // Constant gradient -q: the linear program over the simplex puts all
        // mass on the largest q entry.
        int best = 0;
        for (int j = 1; j < k; ++j)
            if (q[static_cast<std::size_t>(j)] > q[static_cast<std::size_t>(best)]) best = j;
        out.b.assign(static_cast<std::size_t>(k), 0.0);
        out.b[static_cast<std::size_t>(best)] = 1.0;
        out.converged = true;
        out.value = smoothed_value_and_gradient(out.b, c, q, phi, beta).value;
        return out;
    }

    RVec b = warm_start != nullptr ? simplex_projection(*warm_start)
                                   : RVec(static_cast<std::size_t>(k), 1.0 / k);
    RVec b_prev = b;
    double c_prev = 1.0;

    RVec best_b = b;
    double best_value = std::numeric_limits<double>::infinity();
    for (int m = 0; m < max_iters; ++m) {
        RVec y(b.size());
        if (m == 0) {
            y = b;
        } else {
            const double c_m = momentum_coefficient(c_prev);
            const double coef = (c_prev - 1.0) / c_m;
            for (std::size_t i = 0; i < b.size(); ++i)
                y[i] = b[i] + coef * (b[i] - b_prev[i]);
            c_prev = c_m;
        }
        const SmoothedEval ey = smoothed_value_and_gradient(y, c, q, phi, beta);
        RVec step(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) step[i] = y[i] - ey.grad[i] / lip;
        b_prev = std::move(b);
        b = simplex_projection(step);

        const SmoothedEval eb = smoothed_value_and_gradient(b, c, q, phi, beta);
        if (eb.value < best_value) {
            best_value = eb.value;
            best_b = b;
        }
        // Frank-Wolfe gap certifies Xi(b) - Xi(b*) <= gap.
        double gb = 0.0;
        double gmin = eb.grad[0];
        for (std::size_t i = 0; i < b.size(); ++i) {
            gb += eb.grad[i] * b[i];
            gmin = std::min(gmin, eb.grad[i]);
        }
        out.iters = m + 1;
        if (gb - gmin <= eps) {
            out.b = std::move(b);
            out.converged = true;
            out.value = eb.value;
            return out;
        }
    }
    out.b = std::move(best_b);
    out.value = best_value;
    out.converged = false;
    return out;
}

CMat assemble_c(const CMat& downlink, const std::vector<double>& user_noise, const CVec& v) {
    const int n = downlink.rows();
    const int k = downlink.cols();
    CMat c(n, k);
    par_for_work(k, 8.0 * n, [&](int j) {
        const CVec g = downlink.col_vec(j);
        const cplx gv = inner(g, v);  // g_j^H v
        const cplx coef = gv / user_noise[static_cast<std::size_t>(j)];
        for (int i = 0; i < n; ++i) c(i, j) = g[static_cast<std::size_t>(i)] * coef;
    });
    return c;
}

RVec assemble_q(const CMat& downlink, const std::vector<double>& user_noise, const CVec& v) {
    const int k = downlink.cols();
    RVec q(static_cast<std::size_t>(k));
    par_for_work(k, 4.0 * downlink.rows(), [&](int j) {
        q[static_cast<std::size_t>(j)] =
            std::norm(inner(downlink.col_vec(j), v)) / user_noise[static_cast<std::size_t>(j)];
    });
    return q;
}

FixedPointResult fixed_point_v(const CVec& v0, const CMat& downlink,
                               const std::vector<double>& user_noise, double beta,
                               const AgpOptions& opts) {
    opts.validate();
    const int k = downlink.cols();
    if (norm2(v0) > beta * (1.0 + 1e-9))
        throw ConfigError("fixed_point_v: v0 violates the power budget");
    bool any_alive = false;
    for (int j = 0; j < k; ++j)
        if (std::abs(inner(downlink.col_vec(j), v0)) > 0.0) any_alive = true;
    if (!any_alive) throw DegenerateError("degenerate start, re-randomize v0");

    double phi = opts.smoothing;
    if (phi < 0.0) {
        // phi = 0 is only usable when the downlink has full column rank;
        const std::vector<double> eig = hermitian_eigenvalues(gram(downlink));
        const bool full_rank = eig.front() > 1e-20 * std::max(eig.back(), 0.0) &&
                               eig.back() > 0.0 && downlink.cols() <= downlink.rows();
        phi = full_rank ? 0.0 : 0.1 / (2.0 * std::sqrt(beta));
    }

    FixedPointResult out;
    out.phi = phi;
    out.v = v0;
    out.b.assign(static_cast<std::size_t>(k), 1.0 / k);
    out.objective_trace.push_back(max_min_objective(downlink, user_noise, out.v));

    for (int it = 0; it < opts.max_fixed_point_iters; ++it) {
        const auto t0 = Clock::now();
        CMat c = assemble_c(downlink, user_noise, out.v);
        RVec q = assemble_q(downlink, user_noise, out.v);
        // The b-problem is positively homogeneous in (C, q, phi): dividing all
        // three by s divides Xi by s and keeps the minimizer. Normalizing by
        // the q scale makes the inner accuracy target (and the smoothing
        // level) relative, so tiny noise powers do not blow up the objective
        // scale and stall the inner solver.
        double qscale = 1.0;
        for (double x : q) qscale = std::max(qscale, x);
        if (qscale > 1.0) {
            const double inv = 1.0 / qscale;
            for (int j = 0; j < k; ++j) {
                q[static_cast<std::size_t>(j)] *= inv;
                cplx* col = c.col(j);
                for (int i = 0; i < c.rows(); ++i) col[i] *= inv;
            }
        }
        const BSolve bs = solve_b_accelerated(c, q, phi, beta, opts.inner_eps,
                                              opts.max_inner_iters, &out.b);
        out.b = bs.b;

        CVec cb(static_cast<std::size_t>(downlink.rows()), cplx{0.0});
        for (int j = 0; j < k; ++j) {
            const double bj = out.b[static_cast<std::size_t>(j)];
            if (bj == 0.0) continue;
            const cplx* col = c.col(j);
            for (int i = 0; i < downlink.rows(); ++i)
                cb[static_cast<std::size_t>(i)] += bj * col[i];
        }
        const double cbn = norm(cb);
        if (cbn == 0.0)
            throw DegenerateError("fixed_point_v: C(v) b vanished; re-randomize v0");
        CVec v_next(cb.size());
        const double scale = std::sqrt(beta) / cbn;
        for (std::size_t i = 0; i < cb.size(); ++i) v_next[i] = scale * cb[i];

        double diff2 = 0.0;
        for (std::size_t i = 0; i < cb.size(); ++i) diff2 += std::norm(v_next[i] - out.v[i]);
        const double rel = std::sqrt(diff2) / std::max(norm(out.v), 1e-300);
        out.v = std::move(v_next);
        out.iterations = it + 1;
        const double obj = max_min_objective(downlink, user_noise, out.v);
        out.objective_trace.push_back(obj);
        out.rows.push_back({it, bs.iters, obj, entropy(out.b), ns_since(t0)});
        if (rel < opts.fixed_point_tol) {
            out.converged = true;
            break;
        }
    }
    return out;
}

TransceiverDesign recover_design(const CVec& v, const CVec& w, const ChannelSet& ch,
                                 const SystemConfig& cfg,
                                 std::vector<bool>* alignment_impossible) {
    if (norm2(v) == 0.0 || norm2(w) == 0.0)
        throw ConfigError("recover_design: zero rank-one factor");
    const CVec vs = unit_modulus_projection(v);
    const CVec ws = unit_modulus_projection(w);
    TransceiverDesign design;
    design.structure = Structure::partially_connected;
    design.server = outer(vs, ws);
    design.user_tx.assign(static_cast<std::size_t>(cfg.users), cplx{0.0});
    if (alignment_impossible != nullptr)
        alignment_impossible->assign(static_cast<std::size_t>(cfg.users), false);
    for (int k = 0; k < cfg.users; ++k) {
        const cplx wh = inner(ws, ch.uplink.col_vec(k));  // (w*)^H h_k
        if (std::abs(wh) == 0.0) {
            design.user_tx[static_cast<std::size_t>(k)] = std::sqrt(cfg.max_tx_power);
            if (alignment_impossible != nullptr) (*alignment_impossible)[static_cast<std::size_t>(k)] = true;
            continue;
        }
        const cplx t = cfg.weights[static_cast<std::size_t>(k)] / wh;
        design.user_tx[static_cast<std::size_t>(k)] =
            pam::power_ball_projection(t, cfg.max_tx_power);
    }
    design.user_rx = optimal_receivers(design.server, design.user_tx, ch, cfg).rx;
    return design;
}

TransceiverDesign rank_one_design_unprojected(const CVec& v, const CVec& w,
                                              const ChannelSet& ch,
                                              const SystemConfig& cfg) {
    TransceiverDesign design;
    design.structure = Structure::unconstrained_digital;
    design.server = outer(v, w);
    design.user_tx.assign(static_cast<std::size_t>(cfg.users), cplx{0.0});
    design.user_rx.assign(static_cast<std::size_t>(cfg.users), cplx{0.0});
    for (int k = 0; k < cfg.users; ++k) {
        const cplx wh = inner(w, ch.uplink.col_vec(k));
        const cplx gv = inner(ch.downlink.col_vec(k), v);
        if (std::abs(wh) == 0.0 || std::abs(gv) == 0.0)
            throw DegenerateError("rank_one_design_unprojected: dead channel for user " +
                                  std::to_string(k));
        design.user_tx[static_cast<std::size_t>(k)] = cfg.weights[static_cast<std::size_t>(k)] / wh;
        design.user_rx[static_cast<std::size_t>(k)] = cplx{1.0} / gv;
    }
    return design;
}

AgpResult agp_solve(const ChannelSet& ch, const SystemConfig& cfg, const AgpOptions& opts) {
    cfg.validate();
    ch.require_dims(cfg);
    opts.validate();
    require_positive_noise(cfg);

    AgpResult out;
    const WResult wres = solve_w(ch, cfg, opts.w_refine_iters, opts.w_refine_tol);
    const double beta =
        static_cast<double>(cfg.antennas) * cfg.antennas / norm2(wres.w);
    out.diag.beta = beta;
    out.diag.w_norm2 = norm2(wres.w);
    out.diag.w_raw = wres.w;

    // Channel-aligned start v0 = sqrt(beta) normalize(sum_k g_k / sigma_k^2).
    CVec v0(static_cast<std::size_t>(cfg.antennas), cplx{0.0});
    for (int k = 0; k < cfg.users; ++k) {
        const CVec g = ch.downlink.col_vec(k);
        for (int i = 0; i < cfg.antennas; ++i)
            v0[static_cast<std::size_t>(i)] +=
                g[static_cast<std::size_t>(i)] / cfg.user_noise[static_cast<std::size_t>(k)];
    }
    double vn = norm(v0);
    if (vn == 0.0) {
        RandomStream rs(0xA9B5C4D3ULL);
        for (cplx& x : v0) x = rs.next_complex_gaussian(1.0);
        vn = norm(v0);
    }
    const double scale = std::sqrt(beta) / vn;
    for (cplx& x : v0) x *= scale;

    FixedPointResult fp = fixed_point_v(v0, ch.downlink, cfg.user_noise, beta, opts);
    out.diag.rows = fp.rows;
    out.diag.phi = fp.phi;
    out.diag.fixed_point_converged = fp.converged;
    out.diag.v_raw = fp.v;
    out.design = recover_design(fp.v, wres.w, ch, cfg);
    return out;
}

std::string diagnostics_csv(const AgpDiagnostics& diag) {
    std::ostringstream s;
    s << "fp_iter,inner_iters_used,max_min_objective,b_entropy,elapsed_ns\n";
    for (const auto& row : diag.rows) {
        s << row.fp_iter << ',' << row.inner_iters_used << ','
          << fmt_double(row.max_min_objective) << ',' << fmt_double(row.b_entropy) << ','
          << row.elapsed_ns << '\n';
    }
    return s.str();
}

} // namespace umaircomp::agp
