#include <doctest.h>

#include <cmath>

#include "umaircomp/bounds.hpp"
#include "umaircomp/rng.hpp"

using namespace umaircomp;
using namespace umaircomp::bounds;

namespace {

// mu = L = 1, Gamma = 0 exactly: one user, A = sqrt(2) I_2, no ridge.
fl::QuadraticTask unit_curvature_task() {
    fl::QuadraticTask task;
    task.dim = 2;
    task.ridge = 0.0;
    RMat a(2, 2);
    a(0, 0) = std::sqrt(2.0);
    a(1, 1) = std::sqrt(2.0);
    task.data = {a};
    task.targets = {{std::sqrt(2.0), 0.0}};  // optimum at (1, 0)
    task.finalize();
    return task;
}

fl::FlHistory synthetic_history(const fl::QuadraticTask& task, int rounds, int epochs,
                                const fl::StepSchedule& schedule, double max_mse,
                                const RVec& x0, const RVec& x_final) {
    fl::FlHistory h;
    h.scheme = "synthetic";
    h.rounds = rounds;
    h.local_epochs = epochs;
    h.schedule = schedule;
    h.start_params = x0;
    for (int i = 0; i < rounds; ++i) {
        fl::FlRound r;
        r.eta = 1.0;
        r.analytic_mse.assign(static_cast<std::size_t>(task.users()), max_mse);
        r.realized_err = r.analytic_mse;
        r.loss_start.assign(static_cast<std::size_t>(task.users()), task.global_loss(x0));
        r.max_analytic_mse = max_mse;
        r.max_realized_err = max_mse;
        r.target = x0;
        h.round.push_back(std::move(r));
    }
    h.final_params.assign(static_cast<std::size_t>(task.users()), x_final);
    h.final_loss.assign(static_cast<std::size_t>(task.users()), task.global_loss(x_final));
    return h;
}

} // namespace

TEST_CASE("theorem 1 coefficients: worked example and shape") {
    const RVec a = theorem1_coefficients(1.0, 0.5, {1.0}, 2);
    REQUIRE(a.size() == 2);
    CHECK(a[0] == doctest::Approx(1.25).epsilon(1e-15));
    CHECK(a[1] == doctest::Approx(2.5).epsilon(1e-15));

    // mu = L: only the final round contributes
    const RVec b = theorem1_coefficients(2.0, 2.0, {0.5, 0.5}, 4);
    CHECK(b[0] == 0.0);
    CHECK(b[1] == 0.0);
    CHECK(b[2] == 0.0);
    CHECK(b[3] == doctest::Approx(2.0 * 0.5 * (3.0 + 2.0 * 0.5)).epsilon(1e-15));

    // increasing in the round index
    const RVec c = theorem1_coefficients(1.0, 0.3, {0.4, 0.6}, 6);
    for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i] > c[i - 1]);

    CHECK_THROWS_AS(theorem1_coefficients(1.0, 2.0, {1.0}, 3), ConfigError);
    CHECK_THROWS_AS(theorem1_coefficients(1.0, 0.5, {1.0}, 0), ConfigError);
}

TEST_CASE("theorem 1 bound: zero-MSE run gives a zero bound and shrinking gap") {
    const fl::QuadraticTask task = unit_curvature_task();  // but needs mu < L? mu = L ok
    const fl::StepSchedule sched = fl::StepSchedule::constant_step(1.0 / task.smoothness);
    const RVec x0 = {3.0, 3.0};
    const RVec xf = task.optimum;  // exact recovery
    const auto hist = synthetic_history(task, 5, 1, sched, 0.0, x0, xf);
    const BoundReport rep = theorem1_bound({hist}, task);
    CHECK(rep.bound == 0.0);
    CHECK(rep.gap_mean <= 1e-12);
    CHECK(rep.theorem == "theorem1");
}

TEST_CASE("theorem 1 bound scales linearly with the reported MSEs") {
    const fl::QuadraticTask task = unit_curvature_task();
    const fl::StepSchedule sched = fl::StepSchedule::constant_step(1.0 / task.smoothness);
    const RVec x0 = {2.0, 0.0};
    const auto h1 = synthetic_history(task, 4, 1, sched, 0.02, x0, x0);
    const auto h10 = synthetic_history(task, 4, 1, sched, 0.2, x0, x0);
    const BoundReport r1 = theorem1_bound({h1}, task);
    const BoundReport r10 = theorem1_bound({h10}, task);
    CHECK(r10.bound == doctest::Approx(10.0 * r1.bound).epsilon(1e-12));
}

TEST_CASE("theorem 1 refuses mismatched hypotheses, pointing at theorem 2") {
    const fl::QuadraticTask task = unit_curvature_task();
    const RVec x0 = {1.0, 1.0};
    SUBCASE("multiple local epochs") {
        const fl::StepSchedule sched = fl::StepSchedule::constant_step(1.0);
        const auto hist = synthetic_history(task, 2, 2, sched, 0.0, x0, x0);
        CHECK_THROWS_WITH_AS(theorem1_bound({hist}, task),
                             doctest::Contains("theorem2_bound"), HypothesisError);
    }
    SUBCASE("wrong constant step") {
        const fl::StepSchedule sched = fl::StepSchedule::constant_step(0.123);
        const auto hist = synthetic_history(task, 2, 1, sched, 0.0, x0, x0);
        CHECK_THROWS_AS(theorem1_bound({hist}, task), HypothesisError);
    }
    SUBCASE("inverse-time schedule") {
        const fl::StepSchedule sched = fl::StepSchedule::inverse_time(1.0, 1.0, 1);
        const auto hist = synthetic_history(task, 2, 1, sched, 0.0, x0, x0);
        CHECK_THROWS_AS(theorem1_bound({hist}, task), HypothesisError);
    }
}

TEST_CASE("theorem 2 bound: arithmetic on the worked example") {
    // E = 1, G = 1, Gamma = 0, mu = L = 1, nu = 8, R = 1, maxMSE = 0
    const fl::QuadraticTask task = unit_curvature_task();
    REQUIRE(task.strong_convexity == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(task.smoothness == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(std::abs(task.heterogeneity) <= 1e-12);

    const fl::StepSchedule sched = fl::StepSchedule::inverse_time(1.0, 1.0, 1);
    REQUIRE(sched.nu == doctest::Approx(8.0).epsilon(1e-15));
    const RVec x0 = {3.0, 1.0};
    const auto hist = synthetic_history(task, 1, 1, sched, 0.0, x0, x0);
    const BoundReport rep = theorem2_bound({hist}, task, /*grad_bound=*/1.0);
    CHECK(rep.c_const == doctest::Approx(8.0).epsilon(1e-12));
    RVec d = x0;
    for (int i = 0; i < 2; ++i) d[static_cast<std::size_t>(i)] -= task.optimum[static_cast<std::size_t>(i)];
    const double expect = 2.0 * std::max(32.0, 8.0 * norm2(d)) / 9.0;
    CHECK(rep.bound == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("theorem 2 bound is monotone in E and in the heterogeneity") {
    const fl::QuadraticTask task = unit_curvature_task();
    const RVec x0 = {1.5, -0.5};
    const double mse = 0.01;

    const fl::StepSchedule s1 = fl::StepSchedule::inverse_time(1.0, 1.0, 1);
    const fl::StepSchedule s2 = fl::StepSchedule::inverse_time(1.0, 1.0, 2);
    const auto h1 = synthetic_history(task, 3, 1, s1, mse, x0, x0);
    const auto h2 = synthetic_history(task, 3, 2, s2, mse, x0, x0);
    const BoundReport r1 = theorem2_bound({h1}, task, 1.0);
    const BoundReport r2 = theorem2_bound({h2}, task, 1.0);
    CHECK(r2.c_const >= r1.c_const);

    fl::QuadraticTask hetero = task;
    hetero.heterogeneity = 0.5;
    const BoundReport rh = theorem2_bound({h1}, hetero, 1.0);
    CHECK(rh.bound >= r1.bound);
    CHECK(rh.c_const == doctest::Approx(r1.c_const + 6.0 * 0.5).epsilon(1e-12));
}

TEST_CASE("theorem 2 refuses the wrong schedule") {
    const fl::QuadraticTask task = unit_curvature_task();
    const RVec x0 = {1.0, 0.0};
    const fl::StepSchedule wrong = fl::StepSchedule::constant_step(0.5);
    const auto hist = synthetic_history(task, 2, 1, wrong, 0.0, x0, x0);
    CHECK_THROWS_AS(theorem2_bound({hist}, task, 1.0), HypothesisError);
}

TEST_CASE("bound reports are pure functions of the serialized history") {
    const fl::QuadraticTask task = unit_curvature_task();
    const fl::StepSchedule sched = fl::StepSchedule::constant_step(1.0 / task.smoothness);
    const RVec x0 = {2.0, 2.0};
    const auto hist = synthetic_history(task, 3, 1, sched, 0.05, x0, {1.2, 0.3});
    const BoundReport direct = theorem1_bound({hist}, task);
    const fl::FlHistory replay = fl::FlHistory::from_jsonl(hist.to_jsonl());
    const BoundReport again = theorem1_bound({replay}, task);
    CHECK(direct.bound == again.bound);
    CHECK(direct.gap_mean == again.gap_mean);
    CHECK(direct.gap_ci_upper == again.gap_ci_upper);
    CHECK(direct.to_json() == again.to_json());
}

TEST_CASE("bound report JSON and table carry the verdict") {
    const fl::QuadraticTask task = unit_curvature_task();
    const fl::StepSchedule sched = fl::StepSchedule::constant_step(1.0 / task.smoothness);
    const RVec x0 = {2.0, 2.0};
    const auto hist = synthetic_history(task, 3, 1, sched, 1.0, x0, task.optimum);
    const BoundReport rep = theorem1_bound({hist}, task);
    CHECK(rep.holds);  // gap 0, bound positive
    CHECK(rep.to_json().find("\"holds\": true") != std::string::npos);
    CHECK(rep.human_table().find("holds") != std::string::npos);
}

TEST_CASE("theorem 1 verdict holds across 50 randomized configurations") {
    // E = 1, eps = 1/L, rotating over every scheme; a single reproducible
    // violation is a build-failing event.
    const std::vector<std::string> schemes = {"identity", "digital", "digital-proj",
                                              "pam", "agp"};
    const fl::QuadraticTask task = fl::make_quadratic_task(2, 8, 40, 0.5, 0.4, 321);
    baselines::SchemeOptions sopts;
    sopts.pam.outer_iters = 6;
    sopts.pam.inner_f_iters = 60;
    sopts.pam.inner_t_iters = 60;
    int violations = 0;
    for (int conf = 0; conf < 50; ++conf) {
        const SystemConfig cfg = SystemConfig::uniform(4, 2, 1.0, 5e-3, 5e-3, 1.0, 4);
        fl::FlOptions fopts;
        fopts.rounds = 10;
        fopts.local_epochs = 1;
        fopts.schedule = fl::StepSchedule::constant_step(1.0 / task.smoothness);
        const auto reps = fl::run_federated_replicas(
            task, cfg, schemes[static_cast<std::size_t>(conf % 5)], sopts, fopts,
            40000 + static_cast<std::uint64_t>(conf), 12);
        const BoundReport rep = theorem1_bound(reps, task);
        if (!rep.holds) {
            ++violations;
            MESSAGE("violated at config ", conf, " scheme ", schemes[conf % 5],
                    " margin ", rep.margin);
        }
    }
    CHECK(violations == 0);
}
