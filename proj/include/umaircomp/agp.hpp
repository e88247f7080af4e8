// agp.hpp - accelerated gradient projection for partially-connected designs
//
// The rank-one factorization F = v w^H decouples the design: w solves the
// minimum-norm transmit problem min ||w||^2 s.t. |w^H h_k|^2 >= alpha_k^2/P0,
// and v solves the max-min receive problem max_v min_k |g_k^H v|^2/sigma_k^2
// over ||v||^2 <= beta = N^2/||w||^2 by a fixed-point iteration whose inner
// step minimizes the smoothed objective
//   Xi(b) = 2 sqrt(beta) sqrt(phi^2 + ||C b||^2) - q^T b,   b in the simplex,
// with Nesterov-accelerated projected gradient steps. The gradient used here
// is the one consistent with Xi (finite differences arbitrate):
//   grad Xi(b) = 2 sqrt(beta) Re(C^H C b) / sqrt(phi^2 + ||C b||^2) - q.

#pragma once

#include <string>
#include <vector>

#include "umaircomp/system_model.hpp"

namespace umaircomp::agp {

struct DegenerateError : Error {
    using Error::Error;
};

struct AgpOptions {
    double smoothing = -1.0;        // phi; negative selects the automatic rule:
                                    // 0 when the downlink has full column rank,
                                    // else 0.1 / (2 sqrt(beta))
    double inner_eps = 1e-9;        // target accuracy for the b-problem
    int max_fixed_point_iters = 200;
    int max_inner_iters = 20000;
    double fixed_point_tol = 1e-8;  // relative change in v
    int w_refine_iters = 20;
    double w_refine_tol = 1e-10;    // stop refining below this relative gain

    void validate() const;
};

struct WResult {
    CVec w;
    double initial_norm2 = 0.0;   // after the least-norm stage (plus repair)
    double refined_norm2 = 0.0;
    double equality_residual = 0.0;  // ||H^H w - d|| of the least-norm system
    bool ridge_fallback = false;     // rank-deficient Gram, regularized solve
};

// Feasible transmit factor. Least-norm solution of h_k^H w = alpha_k/sqrt(P0),
// scaled up if the equalities were inconsistent, then optionally refined by
// alternating phase restriction + dual projected gradient.
WResult solve_w(const ChannelSet& ch, const SystemConfig& cfg,
                int refine_iters = 20, double refine_tol = 1e-10);

// Euclidean projection onto {b >= 0, sum b = 1} by the sort-threshold rule.
RVec simplex_projection(const RVec& u);

struct SmoothedEval {
    double value = 0.0;
    RVec grad;
};

// Xi(b) and its gradient. Throws DegenerateError when phi = 0 and C b = 0.
SmoothedEval smoothed_value_and_gradient(const RVec& b, const CMat& c, const RVec& q,
                                         double phi, double beta);

// L_Xi(phi) = 2 sqrt(beta) lambda_max[Re(C^H C)] / sqrt(phi^2 + lambda_min(C^H C)/K).
// Throws DegenerateError when both phi = 0 and lambda_min = 0 (infinite constant).
double lipschitz_constant(const CMat& c, double phi, double beta, int users);

// c(m) = (1 + sqrt(1 + 4 c(m-1)^2)) / 2
double momentum_coefficient(double prev);

struct BSolve {
    RVec b;
    int iters = 0;
    bool converged = false;
    double value = 0.0;  // Xi at the returned point
};

// Accelerated projected gradient on Xi over the simplex. Convergence is
// certified by the Frank-Wolfe gap g(b) = grad^T b - min_j grad_j, an upper
// bound on Xi(b) - Xi(b*); returns the best iterate with converged = false
// if max_iters is exhausted first.
BSolve solve_b_accelerated(const CMat& c, const RVec& q, double phi, double beta,
                           double eps, int max_iters, const RVec* warm_start = nullptr);

// C(v) = [g_k g_k^H v / sigma_k^2] and q(v) = [|g_k^H v|^2 / sigma_k^2].
CMat assemble_c(const CMat& downlink, const std::vector<double>& user_noise, const CVec& v);
RVec assemble_q(const CMat& downlink, const std::vector<double>& user_noise, const CVec& v);

struct FixedPointRow {
    int fp_iter = 0;
    int inner_iters_used = 0;
    double max_min_objective = 0.0;  // max_k sigma_k^2 / |g_k^H v|^2
    double b_entropy = 0.0;
    long long elapsed_ns = 0;
};

struct FixedPointResult {
    CVec v;
    RVec b;
    std::vector<FixedPointRow> rows;
    std::vector<double> objective_trace;  // objective at v0, then per iterate
    int iterations = 0;
    bool converged = false;
    double phi = 0.0;  // smoothing actually used
};

// Fixed-point iteration v <- sqrt(beta) C(v) b* / ||C(v) b*||; b is warm
// started across iterations. Throws DegenerateError when g_k^H v0 = 0 for
// every user ("degenerate start, re-randomize v0").
FixedPointResult fixed_point_v(const CVec& v0, const CMat& downlink,
                               const std::vector<double>& user_noise, double beta,
                               const AgpOptions& opts);

// Unit-modulus recovery F = v* (w*)^H, t_k = alpha_k/((w*)^H h_k) clipped to
// the power ball, r_k from the closed-form receiver update. A user whose
// projected channel vanishes gets t_k = sqrt(P0) and its flag set.
TransceiverDesign recover_design(const CVec& v, const CVec& w, const ChannelSet& ch,
                                 const SystemConfig& cfg,
                                 std::vector<bool>* alignment_impossible = nullptr);

// Pre-projection design (F = v w^H, t_k = alpha_k/(w^H h_k), r_k = 1/(g_k^H v)):
// its alignment residual telescopes to zero, which the asymptotic-optimality
// tests rely on.
TransceiverDesign rank_one_design_unprojected(const CVec& v, const CVec& w,
                                              const ChannelSet& ch,
                                              const SystemConfig& cfg);

struct AgpDiagnostics {
    std::vector<FixedPointRow> rows;
    double beta = 0.0;
    double phi = 0.0;
    double w_norm2 = 0.0;
    bool fixed_point_converged = false;
    CVec v_raw;  // unprojected factors
    CVec w_raw;
};

struct AgpResult {
    TransceiverDesign design;
    AgpDiagnostics diag;
};

AgpResult agp_solve(const ChannelSet& ch, const SystemConfig& cfg, const AgpOptions& opts);

// CSV with columns fp_iter,inner_iters_used,max_min_objective,b_entropy,elapsed_ns.
std::string diagnostics_csv(const AgpDiagnostics& diag);

} // namespace umaircomp::agp
