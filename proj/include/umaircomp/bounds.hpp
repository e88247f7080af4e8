// bounds.hpp - training-loss bound computation and verification
//
// Evaluates the two convergence bounds from measured per-round MSEs and the
// exact task constants, then compares them against the simulated loss gap
// over noise replicas. The verdict uses the 95% confidence interval of the
// gap: "holds" means the CI upper bound stays below the theoretical bound.

#pragma once

#include <string>
#include <vector>

#include "umaircomp/fl.hpp"

namespace umaircomp::bounds {

struct HypothesisError : Error {
    using Error::Error;
};

// A^{[i]} = (L/2)(3 + 2 sum_j alpha_j^2)(1 - mu/L)^{R-1-i}, i = 0..R-1.
RVec theorem1_coefficients(double smoothness, double strong_convexity,
                           const std::vector<double>& weights, int rounds);

struct BoundReport {
    std::string theorem;        // "theorem1" or "theorem2"
    std::string scheme;
    std::vector<double> coefficients;  // A^{[i]}, theorem 1 only
    double bound = 0.0;
    double gap_mean = 0.0;      // worst-user mean loss gap over replicas
    double gap_ci_upper = 0.0;  // mean + 1.96 sd/sqrt(n), worst user
    int replicas = 0;
    bool holds = false;
    double margin = 0.0;        // bound - gap_ci_upper
    bool small_r_advisory = false;  // transient term not negligible vs bound
    double transient = 0.0;     // (1 - mu/L)^R (Lambda(x0) - Lambda*), theorem 1

    // theorem 2 constants
    double nu = 0.0;
    double c_const = 0.0;
    double grad_bound = 0.0;     // G
    double heterogeneity = 0.0;  // Gamma
    double max_mse = 0.0;
    double init_dist2 = 0.0;     // ||theta^[0] - theta*||^2

    std::string to_json() const;
    std::string human_table() const;
};

// Hypotheses: E = 1 and constant step 1/L. Violations raise HypothesisError
// pointing at theorem2_bound.
BoundReport theorem1_bound(const std::vector<fl::FlHistory>& replicas,
                           const fl::QuadraticTask& task);

// Hypotheses: the inverse-time schedule eps_t = 2/(mu(nu + iE + tau)) with
// nu = max(8L/mu, E). grad_bound is the G of Assumption 2 (see
// fl::estimate_gradient_bound).
BoundReport theorem2_bound(const std::vector<fl::FlHistory>& replicas,
                           const fl::QuadraticTask& task, double grad_bound);

} // namespace umaircomp::bounds
