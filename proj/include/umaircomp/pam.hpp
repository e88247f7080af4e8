// pam.hpp - penalty alternating minimization for fully-connected designs
//
// Outer loop alternates the server matrix F, the receive scalars r_k, and the
// transmit scalars t_k. The F block splits f into per-user copies u_k plus a
// unit-modulus copy z, penalizes the splits quadratically, and sweeps exact
// closed-form block updates; the t block splits t_j into xi_{k,j} the same
// way. Each sweep's penalized objective (split-sum form) is recorded and must
// never increase - the updates are exact block minimizers.
//
// The u_k normal matrix is (sum_j a_kj a_kj^H + G_k + (rho/K) I) of size
// N^2 x N^2, but every low-rank column lies in the span of (. x g_k), so the
// solve reduces to an N x N Hermitian system per user:
//   u_k = f + (K/rho) g_k psi_k^H,
//   W_k pi_k = (rho/K) F^H g_k + ||g_k||^2 sum_j d_kj alpha_j h_j,
//   W_k = (rho/K) I + ||g_k||^2 (sum_j |d_kj|^2 h_j h_j^H + sigma_b^2 |r_k|^2 I),
// with d_kj = r_k t_j and psi_k assembled from pi_k. Tests check this against
// the explicit N^2 x N^2 solve and first-order optimality.

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "umaircomp/system_model.hpp"

namespace umaircomp::pam {

struct PamOptions {
    double penalty = 1.0;      // rho
    int outer_iters = 20;      // N_max
    int inner_f_iters = 200;   // M_max
    int inner_t_iters = 200;   // Q_max
    double rel_tol = 1e-8;     // early stop on relative objective change
    bool penalty_continuation = false;  // rho <- 10 rho per outer sweep
    bool unit_modulus = true;  // false drops the z-projection (digital bound)

    void validate() const;
};

struct PamState {
    CMat f;                  // N x N working copy of the server matrix
    CMat z;                  // unit-modulus copy
    std::vector<CMat> u;     // K split copies
    CMat xi;                 // K x K transmit splits, xi(k, j)
    CVec tx;                 // t_k
    CVec rx;                 // r_k
};

// Per-outer-iteration context for the F block (r and t held fixed).
struct FBlockContext {
    double rho = 1.0;
    CMat gains;                     // K x K, d_kj = r_k t_j
    std::vector<double> g_norm2;    // ||g_k||^2
    std::vector<CVec> rhs_const;    // ||g_k||^2 sum_j d_kj alpha_j h_j
    std::vector<std::shared_ptr<CholeskyC>> w_factor;  // W_k
};

FBlockContext make_f_block_context(const CVec& rx, const CVec& tx,
                                   const ChannelSet& ch, const SystemConfig& cfg,
                                   double rho);

// Exact minimizer of the u_k subproblem given the current f.
CMat update_u(const PamState& state, const FBlockContext& ctx, const ChannelSet& ch,
              const SystemConfig& cfg, int user);

// f = (mean(u) + z) / 2, or mean(u) when the unit-modulus copy is disabled.
CMat update_f(const PamState& state, bool unit_modulus);

// z = unit-modulus projection of f.
CMat update_z(const PamState& state);

// xi_{k,j} = (conj(G_kj) alpha_j + rho t_j) / (|G_kj|^2 + rho),
// gains(k, j) = r_k g_k^H F h_j.
CMat update_xi(const CVec& tx, const CMat& gains, const std::vector<double>& weights,
               double rho);

// t_j = power-ball projection of the mean of xi_{., j}.
CVec update_t(const CMat& xi, double max_tx_power);

cplx power_ball_projection(cplx value, double max_power);

// K x K matrix of effective scalars r_k g_k^H F h_j.
CMat effective_gains(const CMat& server, const CVec& rx, const ChannelSet& ch,
                     const SystemConfig& cfg);

// Penalized split objectives (sum form) used for the monotonicity traces.
double f_block_penalized_objective(const PamState& state, const FBlockContext& ctx,
                                   const ChannelSet& ch, const SystemConfig& cfg,
                                   bool unit_modulus);
double t_block_penalized_objective(const CMat& xi, const CVec& tx, const CMat& gains,
                                   const std::vector<double>& weights, double rho);

struct PamDiagnostics {
    struct Row {
        int outer = 0;
        char block = 'F';  // 'F', 'r' or 't'
        double objective = 0.0;               // normalized max-MSE, constraints enforced
        double unit_modulus_violation = 0.0;  // of the working design
        long long elapsed_ns = 0;
    };
    std::vector<Row> rows;
    std::vector<std::vector<double>> f_penalized;  // one trace per outer iteration
    std::vector<std::vector<double>> t_penalized;
    std::vector<double> objective_per_outer;
    int outer_iterations = 0;
    bool receiver_degenerate = false;
};

struct PamResult {
    TransceiverDesign design;
    PamDiagnostics diag;
};

// Full PAM solve. `init` must be feasible when given; default start is the
// all-ones matrix with t_k = sqrt(P0).
PamResult pam_solve(const ChannelSet& ch, const SystemConfig& cfg,
                    const PamOptions& opts, const TransceiverDesign* init = nullptr);

// CSV with columns outer_iter,block,objective,max_unit_modulus_violation,elapsed_ns.
std::string diagnostics_csv(const PamDiagnostics& diag);

} // namespace umaircomp::pam
