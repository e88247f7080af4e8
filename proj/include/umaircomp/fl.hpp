// fl.hpp - federated learning over the noisy analog channel
//
// Simulates the full loop: local gradient descent, analog modulation of the
// parameter vector into S = M/2 complex symbols, superimposed uplink, server
// forwarding through the transceiver design, noisy downlink, demodulation.
// The learning task is ridge regression on synthetic data, so the strong
// convexity constants, the optimum, and the heterogeneity measure are exact
// and the loss-bound theorems can be checked numerically.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "umaircomp/baselines.hpp"
#include "umaircomp/system_model.hpp"

namespace umaircomp::fl {

struct QuadraticTask {
    std::vector<RMat> data;     // A_k, per-user sample matrix (D_k x M)
    std::vector<RVec> targets;  // y_k
    double ridge = 0.0;
    int dim = 0;  // M, even so S = M/2

    std::vector<double> weights;  // alpha_k = D_k / sum D
    RMat hessian;                 // global, (1/sum D) sum A^T A + ridge I
    RVec optimum;                 // theta*
    double optimum_loss = 0.0;    // Lambda*
    std::vector<double> user_optimum_loss;  // lambda_k*
    std::vector<RVec> user_optimum;         // argmin of lambda_k
    double heterogeneity = 0.0;             // Gamma = Lambda* - sum alpha_k lambda_k*
    double strong_convexity = 0.0;          // mu
    double smoothness = 0.0;                // L

    int users() const { return static_cast<int>(data.size()); }
    int symbols() const { return dim / 2; }

    double user_loss(int user, const RVec& x) const;
    RVec user_gradient(int user, const RVec& x) const;
    double global_loss(const RVec& x) const;
    RVec global_gradient(const RVec& x) const;

    // Recompute every derived constant from data/targets/ridge.
    void finalize();
};

// Synthetic ridge regression; per-user distribution shift through user-specific
// regression weights w_k = w0 + shift * delta_k. identical_users copies one
// dataset to every user (heterogeneity exactly zero).
QuadraticTask make_quadratic_task(int users, int dim, int samples_per_user, double ridge,
                                  double shift, std::uint64_t seed,
                                  bool identical_users = false);

struct StepSchedule {
    enum class Kind { constant, inverse_time };
    Kind kind = Kind::constant;
    double eps = 0.1;  // constant step
    double mu = 0.0;   // inverse-time: 2 / (mu (nu + i E + tau))
    double nu = 0.0;
    int local_epochs = 1;

    double at(int round, int local) const;

    static StepSchedule constant_step(double eps);
    // eps_t = 2/(mu (nu + iE + tau)), nu = max(8L/mu, E).
    static StepSchedule inverse_time(double mu, double smoothness, int local_epochs);
};

RVec local_gd(const RVec& x0, const QuadraticTask& task, int user, int steps, double eps);
RVec local_gd(const RVec& x0, const QuadraticTask& task, int user, int steps,
              const StepSchedule& schedule, int round);

// s_m = t (x_{2m-1} + j x_{2m}) / sqrt(2 eta)
CVec modulate(const RVec& x, cplx tx, double eta);

// x_{2m-1} = sqrt(2 eta) Re(r y_m), x_{2m} = sqrt(2 eta) Im(r y_m)
RVec demodulate(const CVec& y, cplx rx, double eta);

// Uplink superposition + server forwarding + noisy downlink. Deterministic in
// noise_seed; stream order: server noise (column-major over the N x S block),
// then one downlink stream per user.
std::vector<CVec> transmit_round(const std::vector<CVec>& symbols,
                                 const TransceiverDesign& design, const ChannelSet& ch,
                                 const SystemConfig& cfg, std::uint64_t noise_seed);

RVec target_global(const std::vector<RVec>& local_params, const std::vector<double>& weights);

struct FlRound {
    double eta = 0.0;
    RVec target;                      // theta^{[i]}
    std::vector<double> analytic_mse;  // MSE_k^{[i]} from the closed form
    std::vector<double> realized_err;  // ||x_k^{[i+1]}(0) - theta^{[i]}||^2
    std::vector<double> loss_start;    // Lambda(x_k^{[i]}(0))
    double max_analytic_mse = 0.0;
    double max_realized_err = 0.0;
};

struct FlHistory {
    std::string scheme;
    std::uint64_t seed = 0;
    std::uint64_t noise_seed = 0;
    int rounds = 0;
    int local_epochs = 1;
    StepSchedule schedule;
    std::vector<FlRound> round;
    RVec start_params;                // theta^{[0]}
    std::vector<RVec> final_params;   // x_k^{[R]}(0)
    std::vector<double> final_loss;   // Lambda(x_k^{[R]}(0))

    std::string to_jsonl() const;
    static FlHistory from_jsonl(const std::string& text);
    // Columns: round,loss,max_mse_analytic,max_err_realized,scheme,seed
    // (loss is the worst per-user global loss at the round start).
    std::string summary_csv() const;
};

struct FlOptions {
    int rounds = 10;
    int local_epochs = 1;
    StepSchedule schedule = StepSchedule::constant_step(0.1);
    bool eta_lag = false;  // use the previous round's eta (round 0 uses its own)
    RVec x0;               // empty = zeros
};

// Channels are independent across rounds; the design is re-solved on each
// round's channels. Fully deterministic in (seed, config, scheme).
FlHistory run_federated(const QuadraticTask& task, const SystemConfig& cfg,
                        const std::string& scheme, const baselines::SchemeOptions& sopts,
                        const FlOptions& fopts, std::uint64_t seed);

// Same channel/design sequence, fresh noise per replica. Replica 0 equals
// run_federated with the same seed.
std::vector<FlHistory> run_federated_replicas(const QuadraticTask& task,
                                              const SystemConfig& cfg,
                                              const std::string& scheme,
                                              const baselines::SchemeOptions& sopts,
                                              const FlOptions& fopts, std::uint64_t seed,
                                              int replicas);

// Gradient-norm bound over a region around the noiseless trajectory: G =
// max_k lambda_max(H_k) (rid + ||theta* - x_k*||) with r_id twice the largest
// iterate distance from theta* in an ideal-channel dry run.
double estimate_gradient_bound(const QuadraticTask& task, const FlOptions& fopts);

} // namespace umaircomp::fl
