// baselines.hpp - benchmark transceiver schemes and the scheme registry
//
// Three comparable baselines next to PAM and AGP:
//   identity     - F = I_N, only the user transceivers optimized
//   digital      - PAM with the unit-modulus projection removed (lower bound)
//   digital-proj - the digital design projected onto the unit circle, then
//                  r and t re-optimized
// The registry maps CLI scheme names to solvers and is the hook point for
// plugging in additional solvers.

#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "umaircomp/agp.hpp"
#include "umaircomp/pam.hpp"

namespace umaircomp::baselines {

struct SchemeOptions {
    pam::PamOptions pam;
    agp::AgpOptions agp;
};

struct SchemeRun {
    TransceiverDesign design;
    double objective = 0.0;  // final normalized max-MSE
    int worst_user = 0;
    // Per-iteration objective trace; normalized max-MSE for the PAM family,
    // the max-min receive objective for AGP.
    std::vector<double> convergence;
};

SchemeRun identity_f_scheme(const ChannelSet& ch, const SystemConfig& cfg,
                            const pam::PamOptions& opts);
SchemeRun digital_lower_bound(const ChannelSet& ch, const SystemConfig& cfg,
                              const pam::PamOptions& opts);
SchemeRun digital_projection_scheme(const ChannelSet& ch, const SystemConfig& cfg,
                                    const pam::PamOptions& opts);

using SchemeFn =
    std::function<SchemeRun(const ChannelSet&, const SystemConfig&, const SchemeOptions&)>;

class SchemeRegistry {
public:
    static SchemeRegistry& instance();

    void register_scheme(const std::string& name, SchemeFn fn);
    bool contains(const std::string& name) const;
    SchemeRun run(const std::string& name, const ChannelSet& ch, const SystemConfig& cfg,
                  const SchemeOptions& opts) const;
    std::vector<std::string> names() const;

private:
    SchemeRegistry();
    std::map<std::string, SchemeFn> schemes_;
};

} // namespace umaircomp::baselines
