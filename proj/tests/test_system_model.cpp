#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "umaircomp/rng.hpp"
#include "umaircomp/system_model.hpp"

using namespace umaircomp;

namespace {

SystemConfig scalar_config(double alpha_unused = 1.0) {
    (void)alpha_unused;
    SystemConfig cfg = SystemConfig::uniform(1, 1, 1.0, 0.0, 0.0, 1.0, 1);
    return cfg;
}

TransceiverDesign scalar_design(cplx f, cplx t, cplx r) {
    TransceiverDesign d;
    d.server = CMat(1, 1);
    d.server(0, 0) = f;
    d.user_tx = {t};
    d.user_rx = {r};
    d.structure = Structure::fully_connected;
    return d;
}

ChannelSet scalar_channels(cplx h, cplx g) {
    ChannelSet ch;
    ch.uplink = CMat(1, 1);
    ch.downlink = CMat(1, 1);
    ch.uplink(0, 0) = h;
    ch.downlink(0, 0) = g;
    return ch;
}

} // namespace

TEST_CASE("generate_channels is deterministic in the seed") {
    const SystemConfig cfg = SystemConfig::uniform(2, 1, 1.0, 0.0, 0.0, 1.0);
    const ChannelSet a = generate_channels(cfg, 7);
    const ChannelSet b = generate_channels(cfg, 7);
    CHECK(a.uplink == b.uplink);
    CHECK(a.downlink == b.downlink);
    const ChannelSet c = generate_channels(cfg, 8);
    CHECK_FALSE(a.uplink == c.uplink);
}

TEST_CASE("generate_channels second moment matches the pathloss") {
    // 1e5 i.i.d. entries at rho = 1e-6
    const SystemConfig cfg = SystemConfig::uniform(100000, 1, 1.0, 0.0, 0.0, 1e-6);
    const ChannelSet ch = generate_channels(cfg, 11);
    double mean2 = 0.0;
    for (int n = 0; n < cfg.antennas; ++n) mean2 += std::norm(ch.uplink(n, 0));
    mean2 /= cfg.antennas;
    CHECK(mean2 == doctest::Approx(1e-6).epsilon(0.03));
}

TEST_CASE("generate_channels zero pathloss gives a zero column") {
    SystemConfig cfg = SystemConfig::uniform(4, 2, 1.0, 0.0, 0.0, 1.0);
    cfg.pathloss[1] = 0.0;  // degenerate variance, generation does not validate
    const ChannelSet ch = generate_channels(cfg, 3);
    for (int n = 0; n < 4; ++n) {
        CHECK(ch.uplink(n, 1) == cplx{0.0, 0.0});
        CHECK(ch.downlink(n, 1) == cplx{0.0, 0.0});
    }
    CHECK(std::abs(ch.uplink(0, 0)) > 0.0);
}

TEST_CASE("per-column covariance converges to pathloss times identity") {
    const int n = 2;
    const double rho = 0.5;
    const SystemConfig cfg = SystemConfig::uniform(n, 1, 1.0, 0.0, 0.0, rho);
    CMat cov(n, n);
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        const ChannelSet ch = generate_channels(cfg, static_cast<std::uint64_t>(i));
        const CVec h = ch.uplink.col_vec(0);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                cov(r, c) += h[static_cast<std::size_t>(r)] * std::conj(h[static_cast<std::size_t>(c)]);
    }
    double err2 = 0.0;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            cplx e = cov(r, c) / static_cast<double>(draws);
            if (r == c) e -= rho;
            err2 += std::norm(e);
        }
    CHECK(std::sqrt(err2) <= 0.05 * rho * std::sqrt(static_cast<double>(n)));
}

TEST_CASE("mse_per_user: perfect alignment and zero noise gives zero") {
    const SystemConfig cfg = scalar_config();
    const double mse = mse_per_user(scalar_design(1.0, 1.0, 1.0), scalar_channels(1.0, 1.0),
                                    cfg, 0, 1.0, 1);
    CHECK(mse == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("mse_per_user scalar case with misalignment and noise") {
    SystemConfig cfg = scalar_config();
    cfg.server_noise = 0.1;
    cfg.user_noise = {0.1};
    cfg.weights = {1.0};
    // alpha = 0.5 is expressed through the weight
    cfg.weights[0] = 0.5;
    const double mse = mse_per_user(scalar_design(1.0, 1.0, 1.0), scalar_channels(1.0, 1.0),
                                    cfg, 0, 1.0, 1);
    CHECK(mse == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("mse_per_user matches a Monte-Carlo simulation of the chain") {
    // Same scalar instance as above; simulate the uplink/forward/downlink
    // equations with independent noise draws and average the squared error.
    const double sigma_b2 = 0.1, sigma_u2 = 0.1, alpha = 0.5, eta = 1.0;
    const cplx f = 1.0, t = 1.0, r = 1.0, h = 1.0, g = 1.0;
    std::mt19937_64 gen(12345);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto cnormal = [&](double var) {
        return cplx{std::sqrt(var / 2) * normal(gen), std::sqrt(var / 2) * normal(gen)};
    };
    // deterministic parameter vector x = [1, 1] so eta = ||x||^2 / M = 1
    const cplx sym{1.0, 1.0};
    const cplx theta = alpha * sym;
    const int draws = 1000000;
    double acc = 0.0;
    for (int i = 0; i < draws; ++i) {
        const cplx s = t * sym / std::sqrt(2.0 * eta);
        const cplx received = h * s + cnormal(sigma_b2);
        const cplx y = std::conj(g) * f * received + cnormal(sigma_u2);
        const cplx decoded = std::sqrt(2.0 * eta) * r * y;
        acc += std::norm(decoded - theta);
    }
    acc /= draws;
    CHECK(acc == doctest::Approx(0.9).epsilon(0.01));
}

TEST_CASE("mse_per_user with zero receiver keeps only the weight term") {
    SystemConfig cfg = SystemConfig::uniform(1, 2, 1.0, 1.0, 1.0, 1.0, 1);
    cfg.weights = {0.5, 0.5};
    TransceiverDesign d;
    d.server = CMat(1, 1);
    d.server(0, 0) = 1.0;
    d.user_tx = {1.0, 1.0};
    d.user_rx = {0.0, 0.0};
    ChannelSet ch;
    ch.uplink = CMat(1, 2, cplx{1.0});
    ch.downlink = CMat(1, 2, cplx{1.0});
    const double mse = mse_per_user(d, ch, cfg, 0, 1.0, 1);
    CHECK(mse == doctest::Approx(1.0).epsilon(1e-14));  // 2 sum alpha_j^2
}

TEST_CASE("mse_per_user reports dimension mismatches by name") {
    const SystemConfig cfg = SystemConfig::uniform(2, 2, 1.0, 0.0, 0.0, 1.0);
    ChannelSet ch;
    ch.uplink = CMat(3, 2);
    ch.downlink = CMat(2, 2);
    TransceiverDesign d;
    d.server = CMat(2, 2);
    d.user_tx = {1.0, 1.0};
    d.user_rx = {1.0, 1.0};
    CHECK_THROWS_WITH_AS(mse_per_user(d, ch, cfg, 0, 1.0, 1),
                         doctest::Contains("uplink"), DimensionError);
}

TEST_CASE("max_mse_objective equals the max of per-user values") {
    const SystemConfig cfg = SystemConfig::uniform(3, 3, 1.0, 0.01, 0.02, 1.0);
    const ChannelSet ch = generate_channels(cfg, 5);
    TransceiverDesign d;
    d.server = CMat(3, 3, cplx{1.0});
    d.user_tx = {0.3, 0.5, 0.7};
    d.user_rx = {0.2, cplx{0.0, 0.4}, 0.1};
    const MaxMse mm = max_mse_objective(d, ch, cfg, 1.0, 4);
    double worst = 0.0;
    int worst_k = 0;
    for (int k = 0; k < 3; ++k) {
        const double v = mse_per_user(d, ch, cfg, k, 1.0, 4);
        CHECK(mm.value >= v - 1e-15);
        if (v > worst) {
            worst = v;
            worst_k = k;
        }
    }
    CHECK(mm.value == doctest::Approx(worst));
    CHECK(mm.worst_user == worst_k);
}

TEST_CASE("symmetric users have identical MSEs") {
    SystemConfig cfg = SystemConfig::uniform(2, 2, 1.0, 0.01, 0.01, 1.0);
    ChannelSet ch;
    ch.uplink = CMat(2, 2);
    ch.downlink = CMat(2, 2);
    for (int k = 0; k < 2; ++k) {
        ch.uplink(0, k) = cplx{0.3, 0.4};
        ch.uplink(1, k) = cplx{-0.1, 0.2};
        ch.downlink(0, k) = cplx{0.5, -0.2};
        ch.downlink(1, k) = cplx{0.1, 0.1};
    }
    TransceiverDesign d;
    d.server = CMat(2, 2, cplx{1.0});
    d.user_tx = {0.5, 0.5};
    d.user_rx = {0.7, 0.7};
    const double m0 = mse_per_user(d, ch, cfg, 0, 1.0, 2);
    const double m1 = mse_per_user(d, ch, cfg, 1, 1.0, 2);
    CHECK(std::abs(m0 - m1) <= 1e-12 * std::max(1.0, m0));
}

TEST_CASE("mse is invariant under a common phase rotation of r_k and g_k") {
    SystemConfig cfg = SystemConfig::uniform(3, 2, 1.0, 0.05, 0.02, 1.0);
    ChannelSet ch = generate_channels(cfg, 99);
    TransceiverDesign d;
    d.server = CMat(3, 3, cplx{0.6, 0.8});
    d.user_tx = {cplx{0.4, 0.1}, cplx{0.2, -0.3}};
    d.user_rx = {cplx{0.9, -0.5}, cplx{-0.2, 0.8}};
    const double base = mse_per_user(d, ch, cfg, 0, 1.0, 2);

    const cplx rot = std::polar(1.0, 1.2345);
    TransceiverDesign d2 = d;
    for (auto& r : d2.user_rx) r *= rot;
    ChannelSet ch2 = ch;
    for (int c = 0; c < ch2.downlink.cols(); ++c)
        for (int r = 0; r < ch2.downlink.rows(); ++r) ch2.downlink(r, c) *= rot;
    const double rotated = mse_per_user(d2, ch2, cfg, 0, 1.0, 2);
    CHECK(rotated == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("check_feasibility catalogues violations") {
    SystemConfig cfg = SystemConfig::uniform(2, 2, 4.0, 0.0, 0.0, 1.0);
    TransceiverDesign d;
    d.server = CMat(2, 2, cplx{1.0});
    d.user_tx = {2.0, 2.0};  // |t|^2 = P0 exactly
    d.user_rx = {1.0, 1.0};
    d.structure = Structure::fully_connected;
    const FeasibilityReport ok = check_feasibility(d, cfg);
    CHECK(ok.unit_modulus_violation == 0.0);
    CHECK(ok.power_violation == 0.0);
    CHECK(ok.ok);

    d.server(0, 1) = 2.0;
    const FeasibilityReport bad = check_feasibility(d, cfg);
    CHECK(bad.unit_modulus_violation == doctest::Approx(1.0));
    CHECK_FALSE(bad.ok);

    d.user_tx[0] = 3.0;  // |t|^2 = 9 > P0 = 4
    const FeasibilityReport power = check_feasibility(d, cfg);
    CHECK(power.power_violation == doctest::Approx(5.0));
}

TEST_CASE("rank-1 outer products pass the partially-connected check") {
    SystemConfig cfg = SystemConfig::uniform(5, 2, 1.0, 0.0, 0.0, 1.0);
    RandomStream rs(17);
    CVec v(5), w(5);
    for (auto& x : v) x = unit_modulus_projection(rs.next_complex_gaussian(1.0));
    for (auto& x : w) x = unit_modulus_projection(rs.next_complex_gaussian(1.0));
    TransceiverDesign d;
    d.server = outer(v, w);
    d.user_tx = {0.5, 0.5};
    d.user_rx = {1.0, 1.0};
    d.structure = Structure::partially_connected;
    const FeasibilityReport rep = check_feasibility(d, cfg);
    CHECK(rep.rank1_residual <= 1e-12);
    CHECK(rep.unit_modulus_violation <= 1e-12);
    CHECK(rep.ok);
}

TEST_CASE("unit modulus projection: values, idempotence, optimality") {
    CHECK(unit_modulus_projection(cplx{3.0, 4.0}) == cplx{0.6, 0.8});
    CHECK(unit_modulus_projection(cplx{1.0, 0.0}) == cplx{1.0, 0.0});
    CHECK(unit_modulus_projection(cplx{0.0, 0.0}) == cplx{1.0, 0.0});

    RandomStream rs(31);
    for (int i = 0; i < 1000; ++i) {
        const cplx x = rs.next_complex_gaussian(4.0);
        const cplx once = unit_modulus_projection(x);
        const cplx twice = unit_modulus_projection(once);
        CHECK(once == twice);  // exact idempotence
    }

    for (int i = 0; i < 1000; ++i) {
        const cplx x = rs.next_complex_gaussian(4.0);
        const cplx p = unit_modulus_projection(x);
        const cplx grid = oracles::circle_grid_min(
            [&](cplx z) { return std::norm(z - x); }, 10000);
        CHECK(std::abs(p - x) <= std::abs(grid - x) + 1e-12);
    }
}

TEST_CASE("channel sets serialize to JSON and back") {
    const SystemConfig cfg = SystemConfig::uniform(3, 2, 1.0, 0.0, 0.0, 1.0);
    const ChannelSet ch = generate_channels(cfg, 21);
    const ChannelSet back = ChannelSet::from_json(ch.to_json());
    CHECK(ch.uplink == back.uplink);
    CHECK(ch.downlink == back.downlink);
}

TEST_CASE("config validation names the offending field") {
    SystemConfig cfg = SystemConfig::uniform(2, 2, 1.0, 0.0, 0.0, 1.0);
    cfg.weights = {0.7, 0.7};
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("weights"), ConfigError);
    cfg = SystemConfig::uniform(2, 2, 1.0, 0.0, 0.0, 1.0);
    cfg.max_tx_power = 0.0;
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("max_tx_power"), ConfigError);
}
