#include "umaircomp/bounds.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "umaircomp/io.hpp"

namespace umaircomp::bounds {

namespace {

// Worst-user statistics of the loss gap over replicas.
void gap_statistics(const std::vector<fl::FlHistory>& replicas,
                    const fl::QuadraticTask& task, BoundReport& rep) {
    const int k_users = task.users();
    const int n = static_cast<int>(replicas.size());
    rep.replicas = n;
    rep.gap_mean = 0.0;
    rep.gap_ci_upper = 0.0;
    for (int k = 0; k < k_users; ++k) {
        double mean = 0.0;
        for (const fl::FlHistory& h : replicas)
            mean += h.final_loss[static_cast<std::size_t>(k)] - task.optimum_loss;
        mean /= n;
        double var = 0.0;
        for (const fl::FlHistory& h : replicas) {
            const double d =
                h.final_loss[static_cast<std::size_t>(k)] - task.optimum_loss - mean;
            var += d * d;
        }
        const double se = n > 1 ? std::sqrt(var / (n - 1) / n) : 0.0;
        rep.gap_mean = std::max(rep.gap_mean, mean);
        rep.gap_ci_upper = std::max(rep.gap_ci_upper, mean + 1.96 * se);
    }
}

void require_round_data(const std::vector<fl::FlHistory>& replicas) {
    if (replicas.empty()) throw ConfigError("bound verification needs at least one history");
    for (const fl::FlHistory& h : replicas) {
        if (h.round.empty() || h.final_loss.empty())
            throw ConfigError("bound verification: history has no recorded rounds");
    }
}

} // namespace

RVec theorem1_coefficients(double smoothness, double strong_convexity,
                           const std::vector<double>& weights, int rounds) {
    if (!(strong_convexity > 0.0) || strong_convexity > smoothness)
        throw ConfigError("theorem 1 needs 0 < mu <= L");
    if (rounds < 1) throw ConfigError("theorem 1 needs R >= 1");
    double wsum2 = 0.0;
    for (double a : weights) wsum2 += a * a;
    const double front = 0.5 * smoothness * (3.0 + 2.0 * wsum2);
    const double contraction = 1.0 - strong_convexity / smoothness;
    RVec coeff(static_cast<std::size_t>(rounds));
    for (int i = 0; i < rounds; ++i)
        coeff[static_cast<std::size_t>(i)] = front * std::pow(contraction, rounds - 1 - i);
    return coeff;
}

BoundReport theorem1_bound(const std::vector<fl::FlHistory>& replicas,
                           const fl::QuadraticTask& task) {
    require_round_data(replicas);
    const double mu = task.strong_convexity;
    const double lip = task.smoothness;
    for (const fl::FlHistory& h : replicas) {
        if (h.local_epochs != 1)
            throw HypothesisError("theorem 1 requires E = 1; for E > 1 use theorem2_bound");
        if (h.schedule.kind != fl::StepSchedule::Kind::constant ||
            std::abs(h.schedule.eps - 1.0 / lip) > 1e-9 * (1.0 / lip))
            throw HypothesisError("theorem 1 requires the constant step 1/L; "
                                  "for other schedules use theorem2_bound");
    }

    BoundReport rep;
    rep.theorem = "theorem1";
    rep.scheme = replicas.front().scheme;
    const int rounds = replicas.front().rounds;
    rep.coefficients = theorem1_coefficients(lip, mu, task.weights, rounds);

    double bound = 0.0;
    for (const fl::FlHistory& h : replicas) {
        double b = 0.0;
        for (int i = 0; i < rounds; ++i)
            b += rep.coefficients[static_cast<std::size_t>(i)] *
                 h.round[static_cast<std::size_t>(i)].max_analytic_mse;
        bound += b;
    }
    rep.bound = bound / static_cast<double>(replicas.size());

    gap_statistics(replicas, task, rep);
    const double start_gap =
        task.global_loss(replicas.front().start_params) - task.optimum_loss;
    rep.transient = std::pow(1.0 - mu / lip, rounds) * start_gap;
    rep.small_r_advisory = rep.transient > 0.01 * std::max(rep.bound, 1e-300);
    rep.holds = rep.gap_ci_upper <= rep.bound;
    rep.margin = rep.bound - rep.gap_ci_upper;
    return rep;
}

BoundReport theorem2_bound(const std::vector<fl::FlHistory>& replicas,
                           const fl::QuadraticTask& task, double grad_bound) {
    require_round_data(replicas);
    const double mu = task.strong_convexity;
    const double lip = task.smoothness;
    const int epochs = replicas.front().local_epochs;
    const double nu = std::max(8.0 * lip / mu, static_cast<double>(epochs));
    for (const fl::FlHistory& h : replicas) {
        if (h.schedule.kind != fl::StepSchedule::Kind::inverse_time ||
            std::abs(h.schedule.mu - mu) > 1e-9 * mu ||
            std::abs(h.schedule.nu - nu) > 1e-9 * nu || h.local_epochs != epochs)
            throw HypothesisError(
                "theorem 2 requires the inverse-time schedule 2/(mu(nu + iE + tau)) "
                "with nu = max(8L/mu, E)");
    }

    BoundReport rep;
    rep.theorem = "theorem2";
    rep.scheme = replicas.front().scheme;
    rep.nu = nu;
    rep.grad_bound = grad_bound;
    rep.heterogeneity = task.heterogeneity;
    const int rounds = replicas.front().rounds;

    double max_mse = 0.0;
    for (const fl::FlHistory& h : replicas)
        for (const fl::FlRound& r : h.round) max_mse = std::max(max_mse, r.max_analytic_mse);
    rep.max_mse = max_mse;

    const double re = static_cast<double>(rounds) * epochs;
    rep.c_const = 8.0 * epochs * epochs * grad_bound * grad_bound +
                  6.0 * lip * task.heterogeneity +
                  0.25 * mu * mu * (nu + re) * (nu + re) * max_mse;

    RVec diff = replicas.front().start_params;
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= task.optimum[i];
    rep.init_dist2 = norm2(diff);

    rep.bound = 2.0 * lip * std::max(4.0 * rep.c_const, mu * mu * nu * rep.init_dist2) /
                (mu * mu * (re + nu));

    gap_statistics(replicas, task, rep);
    rep.holds = rep.gap_ci_upper <= rep.bound;
    rep.margin = rep.bound - rep.gap_ci_upper;
    return rep;
}

std::string BoundReport::to_json() const {
    nlohmann::json j;
    j["theorem"] = theorem;
    j["scheme"] = scheme;
    j["bound"] = bound;
    j["gap_mean"] = gap_mean;
    j["gap_ci_upper"] = gap_ci_upper;
    j["replicas"] = replicas;
    j["holds"] = holds;
    j["margin"] = margin;
    j["small_r_advisory"] = small_r_advisory;
    if (theorem == "theorem1") {
        j["coefficients"] = coefficients;
        j["transient"] = transient;
    } else {
        j["nu"] = nu;
        j["c_const"] = c_const;
        j["grad_bound"] = grad_bound;
        j["heterogeneity"] = heterogeneity;
        j["max_mse"] = max_mse;
        j["init_dist2"] = init_dist2;
    }
    return j.dump(2);
}

std::string BoundReport::human_table() const {
    std::ostringstream out;
    out << theorem << " verdict for scheme '" << scheme << "'\n";
    out << "  bound            " << fmt_double(bound) << '\n';
    out << "  gap mean         " << fmt_double(gap_mean) << '\n';
    out << "  gap CI upper     " << fmt_double(gap_ci_upper) << " (" << replicas
        << " replicas)\n";
    out << "  margin           " << fmt_double(margin) << '\n';
    if (theorem == "theorem1") {
        out << "  transient term   " << fmt_double(transient)
            << (small_r_advisory ? "  [advisory: small-R transient not negligible]\n" : "\n");
    } else {
        out << "  nu " << fmt_double(nu) << "  C " << fmt_double(c_const) << "  G "
            << fmt_double(grad_bound) << "  Gamma " << fmt_double(heterogeneity) << '\n';
    }
    out << "  verdict          " << (holds ? "holds" : "violated") << '\n';
    return out.str();
}

} // namespace umaircomp::bounds
