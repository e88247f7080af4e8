// rng.hpp - seeded counter-based random streams
//
// SplitMix64 driven by an explicit 64-bit counter. Each stream is a (key,
// counter) pair; substreams are derived by hashing the parent key with a tag,
// so noise sources can be assigned one stream per (round, stage, user) and
// drawn in any schedule without changing the sequence.
//
// Draw-order contract (relied on by replay tests):
//   - complex Gaussian entries are generated column-major, real part then
//     imaginary part, one Box-Muller pair (two uniforms) per entry;
//   - real Gaussians also consume one full pair and keep the cosine branch.

#pragma once

#include <complex>
#include <cstdint>

namespace umaircomp {

using cplx = std::complex<double>;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

class RandomStream {
public:
    explicit RandomStream(std::uint64_t key) : key_(key) {}

    // Independent child stream; counter starts at zero.
    RandomStream fork(std::uint64_t tag) const {
        return RandomStream(mix64(key_ ^ mix64(tag + 0x632BE59BD9B4E019ull)));
    }
    RandomStream fork(std::uint64_t tag_a, std::uint64_t tag_b) const {
        return fork(tag_a).fork(tag_b);
    }

    std::uint64_t next_u64() { return mix64(key_ + 0xA0761D6478BD642Full * ++counter_); }

    // Uniform on (0, 1]; never returns 0 so log() in Box-Muller is safe.
    double next_uniform() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // One Box-Muller pair -> (cos, sin) branches.
    void next_gaussian_pair(double& a, double& b);

    // N(0, variance), cosine branch of a fresh pair.
    double next_gaussian(double variance = 1.0);

    // Circularly-symmetric complex Gaussian CN(0, variance):
    // real and imaginary parts independent N(0, variance/2).
    cplx next_complex_gaussian(double variance);

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace umaircomp
