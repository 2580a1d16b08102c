#ifndef PERMAFUSE_DIFFEVO_HPP
#define PERMAFUSE_DIFFEVO_HPP

#include "permafuse/kernels.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace permafuse::optimize {

/// Search interval for one kernel parameter.
struct ParamRange {
    double lo = 0.0;
    double hi = 1.0;
};

/// Per-parameter search intervals. Defaults are the geologically reasonable
/// ranges the optimizer is allowed to explore.
struct Bounds {
    ParamRange r_d{100.0, 300.0};
    ParamRange r_g{5.0, 50.0};
    ParamRange alpha{0.5, 2.0};
    ParamRange beta{1.0, 2.0};
    ParamRange gamma{0.01, 2.0};
    ParamRange delta{0.05, 1.0};
    ParamRange w_s{0.1, 0.5};

    void validate() const;

    /// Interval vectors in pack order: r_d, r_g, alpha, beta, gamma, delta,
    /// then w_s when included.
    std::vector<double> lower(bool with_ws) const;
    std::vector<double> upper(bool with_ws) const;
};

std::vector<double> pack_params(const domain::KernelParams& p, bool with_ws);
domain::KernelParams unpack_params(const std::vector<double>& x, bool with_ws,
                                   double default_ws = 0.3);

struct DEConfig {
    int population = 30;
    double mutation = 0.7;  ///< F
    double crossover = 0.9; ///< CR
    int generations = 100;
    std::uint64_t seed = 1;
    double c1 = 0.1; ///< histogram-distance weight in the objective
    double c2 = 0.1; ///< range-penalty weight in the objective
    int bins = 20;   ///< histogram bin count
    /// Optional warm start: replaces the first population member (clamped
    /// into the bounds). Empty = fully random initialization.
    std::vector<double> x0;

    void validate() const;
};

struct DEResult {
    std::vector<double> best;
    double best_f = 0.0;
    /// Best objective after initialization and after every generation
    /// (length generations + 1, non-increasing).
    std::vector<double> history;
    std::size_t failed_evals = 0; ///< evaluations that threw (scored +inf)
};

/// Bounded global minimization, DE/rand/1/bin scheme. Mutants falling
/// outside a bound are reflected back inside, so every evaluated candidate
/// is feasible. Objective exceptions score +infinity; if the entire initial
/// population fails, the first such error is rethrown.
DEResult differential_evolution(
    const std::function<double(const std::vector<double>&)>& objective,
    const std::vector<double>& lower, const std::vector<double>& upper,
    const DEConfig& config);

} // namespace permafuse::optimize

#endif
