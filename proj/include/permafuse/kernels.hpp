#ifndef PERMAFUSE_KERNELS_HPP
#define PERMAFUSE_KERNELS_HPP

#include "permafuse/params.hpp"

#include <cmath>

namespace permafuse::fusion {

/// Weights below this are treated as exactly zero; denormals this small
/// carry no information and only slow the sums down.
inline constexpr double kKernelFloor = 1e-300;

/// Well-test kernel: (d/r_d)^alpha * exp(-(d/r_d)^beta). Zero at d = 0,
/// peaks at d = r_d * (alpha/beta)^(1/beta), decays beyond.
inline double kernel_wt(double d, const domain::KernelParams& p) {
    const double u = d / p.r_d;
    if (u == 0.0) return 0.0;
    const double w = std::pow(u, p.alpha) * std::exp(-std::pow(u, p.beta));
    return w < kKernelFloor ? 0.0 : w;
}

/// Well-log kernel: gamma * exp(-(d/r_g)^delta). Maximal (= gamma) at the
/// well itself.
inline double kernel_wl(double d, const domain::KernelParams& p) {
    const double w = p.gamma * std::exp(-std::pow(d / p.r_g, p.delta));
    return w < kKernelFloor ? 0.0 : w;
}

} // namespace permafuse::fusion

#endif
