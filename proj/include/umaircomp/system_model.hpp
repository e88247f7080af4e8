// system_model.hpp - physical system description and shared primitives
//
// Holds the system configuration, one round's channel realization, the
// transceiver design triple (server matrix F, user transmit scalars t_k,
// user receive scalars r_k), the per-user MSE expression the optimizers
// minimize, feasibility checks, and the unit-modulus projection.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "umaircomp/linalg.hpp"

namespace umaircomp {

struct SystemConfig {
    int antennas = 8;              // N
    int users = 4;                 // K
    int block_len = 16;            // S complex symbols per block (M = 2S)
    double max_tx_power = 0.01;    // P0 [W]
    double server_gain = 1.0;      // gamma
    double server_noise = 1e-11;   // sigma_b^2 [W]
    std::vector<double> user_noise;  // sigma_k^2 [W], length K
    std::vector<double> weights;     // alpha_k, positive, sums to 1
    std::vector<double> pathloss;    // rho_k, linear scale, positive

    // Uniform weights, common noise/pathloss across users.
    static SystemConfig uniform(int antennas, int users, double max_tx_power,
                                double server_noise, double user_noise,
                                double pathloss, int block_len = 16,
                                double server_gain = 1.0);

    void validate() const;  // throws ConfigError naming the offending field
};

struct ChannelSet {
    CMat uplink;    // N x K, column k is user k's uplink channel
    CMat downlink;  // N x K, column k is user k's downlink channel

    void require_dims(const SystemConfig& cfg) const;
    std::string to_json() const;
    static ChannelSet from_json(const std::string& text);
};

enum class Structure {
    fully_connected,
    partially_connected,
    unconstrained_digital,
    identity,
};

const char* structure_name(Structure s);

struct TransceiverDesign {
    CMat server;             // N x N aggregation matrix applied in the RF domain
    CVec user_tx;            // t_k, length K
    CVec user_rx;            // r_k, length K
    Structure structure = Structure::fully_connected;
};

// Channels drawn i.i.d. CN(0, rho_k I_N) per user; deterministic in the seed.
// Draw order: uplink then downlink, columns in user order, entries top to
// bottom, real part before imaginary part.
ChannelSet generate_channels(const SystemConfig& cfg, std::uint64_t seed);

// The per-user parameter-estimation MSE:
//   2 S eta [ gamma sum_j |r_k g_k^H F h_j t_j - alpha_j|^2
//             + gamma sigma_b^2 ||r_k g_k^H F||^2 + sigma_k^2 |r_k|^2 ].
double mse_per_user(const TransceiverDesign& design, const ChannelSet& ch,
                    const SystemConfig& cfg, int user, double eta, int block_len);

struct MaxMse {
    double value = 0.0;
    int worst_user = 0;
};

MaxMse max_mse_objective(const TransceiverDesign& design, const ChannelSet& ch,
                         const SystemConfig& cfg, double eta, int block_len);

// gamma sum_j |r_k g_k^H F h_j t_j - alpha_j|^2, the alignment part of the MSE.
double alignment_residual(const TransceiverDesign& design, const ChannelSet& ch,
                          const SystemConfig& cfg, int user);

// Objective of problem P: the max-MSE with the 2 S eta factor normalized
// away (eta = 1/2, S = 1). This is what solver diagnostics report.
MaxMse normalized_max_mse(const TransceiverDesign& design, const ChannelSet& ch,
                          const SystemConfig& cfg);

struct FeasibilityReport {
    double unit_modulus_violation = 0.0;  // max | |F_ll'| - 1 |
    double rank1_residual = 0.0;          // sigma_2 / sigma_1, PC structure only
    double power_violation = 0.0;         // max [ |t_k|^2 - P0 ]^+
    bool ok = true;                       // per declared structure
};

// Violations are data, not errors; `ok` applies the declared structure's
// constraint set (rank-1 threshold 1e-9, others 1e-9).
FeasibilityReport check_feasibility(const TransceiverDesign& design,
                                    const SystemConfig& cfg);

// Entrywise projection onto the unit circle. proj(0) = 1 by convention so
// runs stay reproducible; inputs already on the circle pass through
// unchanged, which makes the projection exactly idempotent.
cplx unit_modulus_projection(cplx x);
CVec unit_modulus_projection(const CVec& x);
CMat unit_modulus_projection(const CMat& x);

// Receive scalars minimizing each user's MSE for fixed F and t (closed form
// from the stationarity of the MSE in conj(r_k)). Zero denominator (dead
// channel, zero noise) yields r_k = 0 and sets the flag for that user.
struct ReceiverUpdate {
    CVec rx;
    std::vector<bool> degenerate;
};

ReceiverUpdate optimal_receivers(const CMat& server, const CVec& user_tx,
                                 const ChannelSet& ch, const SystemConfig& cfg);

} // namespace umaircomp
