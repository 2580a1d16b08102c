#ifndef PERMAFUSE_PARAMS_HPP
#define PERMAFUSE_PARAMS_HPP

#include "permafuse/common.hpp"

#include <string>

namespace permafuse::domain {

/// The seven tunable kernel constants of the fusion model.
struct KernelParams {
    double r_d = 250.0;  ///< well-test drainage radius, m
    double r_g = 20.0;   ///< well-log geological correlation radius, m
    double alpha = 1.0;  ///< locality index of the well-test kernel
    double beta = 1.0;   ///< well-test radial exponent
    double gamma = 0.1;  ///< well-log low-fidelity factor
    double delta = 0.5;  ///< well-log radial exponent
    double w_s = 0.3;    ///< seismic weight

    void validate() const {
        const auto positive = [](double v, const char* name) {
            if (!(v > 0.0))
                throw InputError(std::string("kernel parameter ") + name +
                                 " must be positive");
        };
        positive(r_d, "r_d");
        positive(r_g, "r_g");
        positive(alpha, "alpha");
        positive(beta, "beta");
        positive(gamma, "gamma");
        positive(delta, "delta");
        positive(w_s, "w_s");
    }
};

} // namespace permafuse::domain

#endif
