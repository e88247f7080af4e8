#include "umaircomp/system_model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "umaircomp/exec.hpp"
#include "umaircomp/rng.hpp"

namespace umaircomp {

SystemConfig SystemConfig::uniform(int antennas, int users, double max_tx_power,
                                   double server_noise, double user_noise,
                                   double pathloss, int block_len, double server_gain) {
    SystemConfig cfg;
    cfg.antennas = antennas;
    cfg.users = users;
    cfg.block_len = block_len;
    cfg.max_tx_power = max_tx_power;
    cfg.server_gain = server_gain;
    cfg.server_noise = server_noise;
    cfg.user_noise.assign(static_cast<std::size_t>(users), user_noise);
    cfg.weights.assign(static_cast<std::size_t>(users), 1.0 / users);
    cfg.pathloss.assign(static_cast<std::size_t>(users), pathloss);
    return cfg;
}

void SystemConfig::validate() const {
    if (antennas < 1) throw ConfigError("antennas must be positive");
    if (users < 1) throw ConfigError("users must be positive");
    if (block_len < 1) throw ConfigError("block_len must be positive");
    if (!(max_tx_power > 0.0)) throw ConfigError("max_tx_power must be > 0");
    if (!(server_gain > 0.0)) throw ConfigError("server_gain must be > 0");
    if (!(server_noise >= 0.0)) throw ConfigError("server_noise must be >= 0");
    const auto k = static_cast<std::size_t>(users);
    if (user_noise.size() != k) throw ConfigError("user_noise must have one entry per user");
    if (weights.size() != k) throw ConfigError("weights must have one entry per user");
    if (pathloss.size() != k) throw ConfigError("pathloss must have one entry per user");
    double wsum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        if (!(user_noise[i] >= 0.0)) throw ConfigError("user_noise entries must be >= 0");
        if (!(weights[i] > 0.0)) throw ConfigError("weights entries must be > 0");
        if (!(pathloss[i] > 0.0)) throw ConfigError("pathloss entries must be > 0");
        wsum += weights[i];
    }
    if (std::abs(wsum - 1.0) > 1e-9) throw ConfigError("weights must sum to 1");
}

void ChannelSet::require_dims(const SystemConfig& cfg) const {
    if (uplink.rows() != cfg.antennas || uplink.cols() != cfg.users)
        throw DimensionError("uplink channel matrix is " + std::to_string(uplink.rows()) +
                             "x" + std::to_string(uplink.cols()) + ", expected " +
                             std::to_string(cfg.antennas) + "x" + std::to_string(cfg.users));
    if (downlink.rows() != cfg.antennas || downlink.cols() != cfg.users)
        throw DimensionError("downlink channel matrix is " + std::to_string(downlink.rows()) +
                             "x" + std::to_string(downlink.cols()) + ", expected " +
                             std::to_string(cfg.antennas) + "x" + std::to_string(cfg.users));
}

namespace {

nlohmann::json mat_to_json(const CMat& m) {
    nlohmann::json entries = nlohmann::json::array();
    for (int c = 0; c < m.cols(); ++c)
        for (int r = 0; r < m.rows(); ++r)
            entries.push_back({m(r, c).real(), m(r, c).imag()});
    return entries;
}

CMat mat_from_json(const nlohmann::json& entries, int rows, int cols) {
    CMat m(rows, cols);
    std::size_t i = 0;
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r, ++i)
            m(r, c) = cplx(entries.at(i).at(0).get<double>(), entries.at(i).at(1).get<double>());
    return m;
}

} // namespace

std::string ChannelSet::to_json() const {
    nlohmann::json j;
    j["N"] = uplink.rows();
    j["K"] = uplink.cols();
    j["H"] = mat_to_json(uplink);
    j["G"] = mat_to_json(downlink);
    return j.dump();
}

ChannelSet ChannelSet::from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    const int n = j.at("N").get<int>();
    const int k = j.at("K").get<int>();
    ChannelSet ch;
    ch.uplink = mat_from_json(j.at("H"), n, k);
    ch.downlink = mat_from_json(j.at("G"), n, k);
    return ch;
}

const char* structure_name(Structure s) {
    switch (s) {
        case Structure::fully_connected: return "fully-connected";
        case Structure::partially_connected: return "partially-connected";
        case Structure::unconstrained_digital: return "unconstrained-digital";
        case Structure::identity: return "identity";
    }
    return "unknown";
}

ChannelSet generate_channels(const SystemConfig& cfg, std::uint64_t seed) {
    ChannelSet ch;
    ch.uplink = CMat(cfg.antennas, cfg.users);
    ch.downlink = CMat(cfg.antennas, cfg.users);
    RandomStream rs = RandomStream(seed).fork(/*tag=*/0x6368616eULL);  // channel stream
    for (int k = 0; k < cfg.users; ++k) {
        const double rho = cfg.pathloss[static_cast<std::size_t>(k)];
        for (int n = 0; n < cfg.antennas; ++n) ch.uplink(n, k) = rs.next_complex_gaussian(rho);
    }
    for (int k = 0; k < cfg.users; ++k) {
        const double rho = cfg.pathloss[static_cast<std::size_t>(k)];
        for (int n = 0; n < cfg.antennas; ++n) ch.downlink(n, k) = rs.next_complex_gaussian(rho);
    }
    return ch;
}

double mse_per_user(const TransceiverDesign& design, const ChannelSet& ch,
                    const SystemConfig& cfg, int user, double eta, int block_len) {
    ch.require_dims(cfg);
    if (design.server.rows() != cfg.antennas || design.server.cols() != cfg.antennas)
        throw DimensionError("server matrix is " + std::to_string(design.server.rows()) + "x" +
                             std::to_string(design.server.cols()) + ", expected " +
                             std::to_string(cfg.antennas) + "x" + std::to_string(cfg.antennas));
    if (static_cast<int>(design.user_tx.size()) != cfg.users)
        throw DimensionError("user_tx has length " + std::to_string(design.user_tx.size()) +
                             ", expected " + std::to_string(cfg.users));
    if (static_cast<int>(design.user_rx.size()) != cfg.users)
        throw DimensionError("user_rx has length " + std::to_string(design.user_rx.size()) +
                             ", expected " + std::to_string(cfg.users));
    if (user < 0 || user >= cfg.users) throw DimensionError("user index out of range");
    if (!(eta > 0.0)) throw ConfigError("eta must be > 0");

    const cplx rk = design.user_rx[static_cast<std::size_t>(user)];
    // row = g_k^H F
    CVec grow = matvec_adj(design.server, ch.downlink.col_vec(user));
    for (auto& v : grow) v = std::conj(v);  // entries of the row vector g_k^H F

    double align = 0.0;
    for (int j = 0; j < cfg.users; ++j) {
        cplx gain = 0.0;
        const cplx* h = ch.uplink.col(j);
        for (int n = 0; n < cfg.antennas; ++n) gain += grow[static_cast<std::size_t>(n)] * h[n];
        gain *= rk * design.user_tx[static_cast<std::size_t>(j)];
        align += std::norm(gain - cfg.weights[static_cast<std::size_t>(j)]);
    }
    double row2 = 0.0;
    for (const cplx& v : grow) row2 += std::norm(v);
    const double noise_srv = cfg.server_noise * std::norm(rk) * row2;
    const double noise_usr = cfg.user_noise[static_cast<std::size_t>(user)] * std::norm(rk);
    return 2.0 * block_len * eta *
           (cfg.server_gain * align + cfg.server_gain * noise_srv + noise_usr);
}

MaxMse max_mse_objective(const TransceiverDesign& design, const ChannelSet& ch,
                         const SystemConfig& cfg, double eta, int block_len) {
    MaxMse out;
    out.value = -std::numeric_limits<double>::infinity();
    std::vector<double> per_user(static_cast<std::size_t>(cfg.users));
    const double work = static_cast<double>(cfg.antennas) * (cfg.antennas + cfg.users);
    par_for_work(cfg.users, work, [&](int k) {
        per_user[static_cast<std::size_t>(k)] = mse_per_user(design, ch, cfg, k, eta, block_len);
    });
    for (int k = 0; k < cfg.users; ++k) {
        if (per_user[static_cast<std::size_t>(k)] > out.value) {
            out.value = per_user[static_cast<std::size_t>(k)];
            out.worst_user = k;
        }
    }
    return out;
}

MaxMse normalized_max_mse(const TransceiverDesign& design, const ChannelSet& ch,
                          const SystemConfig& cfg) {
    return max_mse_objective(design, ch, cfg, 0.5, 1);
}

double alignment_residual(const TransceiverDesign& design, const ChannelSet& ch,
                          const SystemConfig& cfg, int user) {
    ch.require_dims(cfg);
    const cplx rk = design.user_rx[static_cast<std::size_t>(user)];
    CVec grow = matvec_adj(design.server, ch.downlink.col_vec(user));
    double align = 0.0;
    for (int j = 0; j < cfg.users; ++j) {
        cplx gain = 0.0;
        const cplx* h = ch.uplink.col(j);
        for (int n = 0; n < cfg.antennas; ++n)
            gain += std::conj(grow[static_cast<std::size_t>(n)]) * h[n];
        gain *= rk * design.user_tx[static_cast<std::size_t>(j)];
        align += std::norm(gain - cfg.weights[static_cast<std::size_t>(j)]);
    }
    return cfg.server_gain * align;
}

FeasibilityReport check_feasibility(const TransceiverDesign& design, const SystemConfig& cfg) {
    FeasibilityReport rep;
    const CMat& f = design.server;
    double worst_mod = 0.0;
    for (int c = 0; c < f.cols(); ++c)
        for (int r = 0; r < f.rows(); ++r)
            worst_mod = std::max(worst_mod, std::abs(std::abs(f(r, c)) - 1.0));
    rep.unit_modulus_violation = worst_mod;

    if (design.structure == Structure::partially_connected) {
        const auto [s1, s2] = top_two_singular_values(f);
        rep.rank1_residual = s1 > 0.0 ? s2 / s1 : 0.0;
    }

    double worst_power = 0.0;
    for (const cplx& t : design.user_tx)
        worst_power = std::max(worst_power, std::norm(t) - cfg.max_tx_power);
    rep.power_violation = std::max(worst_power, 0.0);

    constexpr double tol = 1e-9;
    rep.ok = rep.power_violation <= tol;
    switch (design.structure) {
        case Structure::fully_connected:
            rep.ok = rep.ok && rep.unit_modulus_violation <= tol;
            break;
        case Structure::partially_connected:
            rep.ok = rep.ok && rep.unit_modulus_violation <= tol && rep.rank1_residual <= tol;
            break;
        case Structure::unconstrained_digital:
        case Structure::identity:
            break;
    }
    return rep;
}

cplx unit_modulus_projection(cplx x) {
    const double m = std::abs(x);
    if (m == 0.0) return {1.0, 0.0};
    // Already on the circle (to rounding): pass through so the projection is
    // exactly idempotent.
    if (std::abs(m - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon()) return x;
    return x / m;
}

CVec unit_modulus_projection(const CVec& x) {
    CVec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = unit_modulus_projection(x[i]);
    return y;
}

CMat unit_modulus_projection(const CMat& x) {
    CMat y(x.rows(), x.cols());
    for (int c = 0; c < x.cols(); ++c)
        for (int r = 0; r < x.rows(); ++r) y(r, c) = unit_modulus_projection(x(r, c));
    return y;
}

ReceiverUpdate optimal_receivers(const CMat& server, const CVec& user_tx,
                                 const ChannelSet& ch, const SystemConfig& cfg) {
    ReceiverUpdate out;
    out.rx.assign(static_cast<std::size_t>(cfg.users), cplx{0.0});
    out.degenerate.assign(static_cast<std::size_t>(cfg.users), false);
    const double work = static_cast<double>(cfg.antennas) * (cfg.antennas + cfg.users);
    par_for_work(cfg.users, work, [&](int k) {
        CVec grow = matvec_adj(server, ch.downlink.col_vec(k));
        for (auto& v : grow) v = std::conj(v);  // g_k^H F as a row
        cplx num = 0.0;
        double den = 0.0;
        for (int j = 0; j < cfg.users; ++j) {
            cplx gain = 0.0;
            const cplx* h = ch.uplink.col(j);
            for (int n = 0; n < cfg.antennas; ++n) gain += grow[static_cast<std::size_t>(n)] * h[n];
            gain *= user_tx[static_cast<std::size_t>(j)];
            num += cfg.weights[static_cast<std::size_t>(j)] * std::conj(gain);
            den += std::norm(gain);
        }
        double row2 = 0.0;
        for (const cplx& v : grow) row2 += std::norm(v);
        den += cfg.server_noise * row2 +
               cfg.user_noise[static_cast<std::size_t>(k)] / cfg.server_gain;
        if (den > 0.0) {
            out.rx[static_cast<std::size_t>(k)] = num / den;
        } else {
            out.degenerate[static_cast<std::size_t>(k)] = true;  // r_k = 0
        }
    });
    return out;
}

} // namespace umaircomp
