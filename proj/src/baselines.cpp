#include "umaircomp/baselines.hpp"

#include <cmath>

namespace umaircomp::baselines {

namespace {

// xi/t penalty loop for a fixed server matrix and receivers.
CVec t_block(const CMat& server, const CVec& rx, const CVec& t_init, const ChannelSet& ch,
             const SystemConfig& cfg, double rho, int iters) {
    const CMat gains = pam::effective_gains(server, rx, ch, cfg);
    CVec tx = t_init;
    for (int q = 0; q < iters; ++q) {
        const CMat xi = pam::update_xi(tx, gains, cfg.weights, rho);
        tx = pam::update_t(xi, cfg.max_tx_power);
    }
    return tx;
}

} // namespace

SchemeRun identity_f_scheme(const ChannelSet& ch, const SystemConfig& cfg,
                            const pam::PamOptions& opts) {
    cfg.validate();
    ch.require_dims(cfg);
    opts.validate();

    SchemeRun out;
    out.design.structure = Structure::identity;
    out.design.server = CMat::identity(cfg.antennas);
    out.design.user_tx.assign(static_cast<std::size_t>(cfg.users),
                              cplx{std::sqrt(cfg.max_tx_power), 0.0});
    out.design.user_rx =
        optimal_receivers(out.design.server, out.design.user_tx, ch, cfg).rx;

    double prev = normalized_max_mse(out.design, ch, cfg).value;
    out.convergence.push_back(prev);
    for (int it = 0; it < opts.outer_iters; ++it) {
        // The xi/t penalty loop minimizes a sum surrogate, so its output can
        // raise the max objective; keep the previous transmitters when it does.
        const CVec cand = t_block(out.design.server, out.design.user_rx,
                                  out.design.user_tx, ch, cfg, opts.penalty,
                                  opts.inner_t_iters);
        TransceiverDesign probe = out.design;
        probe.user_tx = cand;
        probe.user_rx = optimal_receivers(out.design.server, cand, ch, cfg).rx;
        if (normalized_max_mse(probe, ch, cfg).value <= prev) out.design = probe;
        out.design.user_rx =
            optimal_receivers(out.design.server, out.design.user_tx, ch, cfg).rx;
        const double obj = normalized_max_mse(out.design, ch, cfg).value;
        out.convergence.push_back(obj);
        if (std::abs(prev - obj) < opts.rel_tol * std::max(1.0, std::abs(prev))) break;
        prev = obj;
    }
    const MaxMse final = normalized_max_mse(out.design, ch, cfg);
    out.objective = final.value;
    out.worst_user = final.worst_user;
    return out;
}

SchemeRun digital_lower_bound(const ChannelSet& ch, const SystemConfig& cfg,
                              const pam::PamOptions& opts) {
    pam::PamOptions digital = opts;
    digital.unit_modulus = false;
    const pam::PamResult res = pam::pam_solve(ch, cfg, digital);
    SchemeRun out;
    out.design = res.design;
    out.convergence = res.diag.objective_per_outer;
    const MaxMse final = normalized_max_mse(out.design, ch, cfg);
    out.objective = final.value;
    out.worst_user = final.worst_user;
    return out;
}

SchemeRun digital_projection_scheme(const ChannelSet& ch, const SystemConfig& cfg,
                                    const pam::PamOptions& opts) {
    SchemeRun out = digital_lower_bound(ch, cfg, opts);
    out.design.server = unit_modulus_projection(out.design.server);
    out.design.structure = Structure::fully_connected;
    out.design.user_rx =
        optimal_receivers(out.design.server, out.design.user_tx, ch, cfg).rx;
    out.design.user_tx = t_block(out.design.server, out.design.user_rx,
                                 out.design.user_tx, ch, cfg, opts.penalty,
                                 opts.inner_t_iters);
    const MaxMse final = normalized_max_mse(out.design, ch, cfg);
    out.objective = final.value;
    out.worst_user = final.worst_user;
    out.convergence.push_back(final.value);
    return out;
}

SchemeRegistry& SchemeRegistry::instance() {
    static SchemeRegistry reg;
    return reg;
}

SchemeRegistry::SchemeRegistry() {
    schemes_["identity"] = [](const ChannelSet& ch, const SystemConfig& cfg,
                              const SchemeOptions& opts) {
        return identity_f_scheme(ch, cfg, opts.pam);
    };
    schemes_["digital"] = [](const ChannelSet& ch, const SystemConfig& cfg,
                             const SchemeOptions& opts) {
        return digital_lower_bound(ch, cfg, opts.pam);
    };
    schemes_["digital-proj"] = [](const ChannelSet& ch, const SystemConfig& cfg,
                                  const SchemeOptions& opts) {
        return digital_projection_scheme(ch, cfg, opts.pam);
    };
    schemes_["pam"] = [](const ChannelSet& ch, const SystemConfig& cfg,
                         const SchemeOptions& opts) {
        const pam::PamResult res = pam::pam_solve(ch, cfg, opts.pam);
        SchemeRun out;
        out.design = res.design;
        out.convergence = res.diag.objective_per_outer;
        const MaxMse final = normalized_max_mse(out.design, ch, cfg);
        out.objective = final.value;
        out.worst_user = final.worst_user;
        return out;
    };
    schemes_["agp"] = [](const ChannelSet& ch, const SystemConfig& cfg,
                         const SchemeOptions& opts) {
        const agp::AgpResult res = agp::agp_solve(ch, cfg, opts.agp);
        SchemeRun out;
        out.design = res.design;
        for (const auto& row : res.diag.rows) out.convergence.push_back(row.max_min_objective);
        const MaxMse final = normalized_max_mse(out.design, ch, cfg);
        out.objective = final.value;
        out.worst_user = final.worst_user;
        return out;
    };
}

void SchemeRegistry::register_scheme(const std::string& name, SchemeFn fn) {
    schemes_[name] = std::move(fn);
}

bool SchemeRegistry::contains(const std::string& name) const {
    return schemes_.count(name) > 0;
}

SchemeRun SchemeRegistry::run(const std::string& name, const ChannelSet& ch,
                              const SystemConfig& cfg, const SchemeOptions& opts) const {
    const auto it = schemes_.find(name);
    if (it == schemes_.end()) {
        std::string known;
        for (const auto& [k, v] : schemes_) {
            if (!known.empty()) known += ", ";
            known += k;
        }
        throw ConfigError("unknown scheme '" + name + "'; available: " + known);
    }
    return it->second(ch, cfg, opts);
}

std::vector<std::string> SchemeRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : schemes_) out.push_back(k);
    return out;
}

} // namespace umaircomp::baselines
