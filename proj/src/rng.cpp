#include "umaircomp/rng.hpp"

#include <cmath>

namespace umaircomp {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

void RandomStream::next_gaussian_pair(double& a, double& b) {
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    a = radius * std::cos(kTwoPi * u2);
    b = radius * std::sin(kTwoPi * u2);
}

double RandomStream::next_gaussian(double variance) {
    double a, b;
    next_gaussian_pair(a, b);
    (void)b;
    return std::sqrt(variance) * a;
}

cplx RandomStream::next_complex_gaussian(double variance) {
    double a, b;
    next_gaussian_pair(a, b);
    const double scale = std::sqrt(0.5 * variance);
    return {scale * a, scale * b};
}

} // namespace umaircomp
