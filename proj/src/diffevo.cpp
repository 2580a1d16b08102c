#include "permafuse/diffevo.hpp"
#include "permafuse/common.hpp"
#include "permafuse/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace permafuse::optimize {

using domain::KernelParams;

void Bounds::validate() const {
    const auto check = [](const ParamRange& r, const char* name) {
        if (!(r.lo < r.hi))
            throw InputError(std::string("bound for ") + name +
                             " must have lo < hi");
        if (!(r.lo > 0.0))
            throw InputError(std::string("bound for ") + name +
                             " must be positive");
    };
    check(r_d, "r_d");
    check(r_g, "r_g");
    check(alpha, "alpha");
    check(beta, "beta");
    check(gamma, "gamma");
    check(delta, "delta");
    check(w_s, "w_s");
}

std::vector<double> Bounds::lower(bool with_ws) const {
    std::vector<double> v{r_d.lo, r_g.lo, alpha.lo, beta.lo, gamma.lo, delta.lo};
    if (with_ws) v.push_back(w_s.lo);
    return v;
}

std::vector<double> Bounds::upper(bool with_ws) const {
    std::vector<double> v{r_d.hi, r_g.hi, alpha.hi, beta.hi, gamma.hi, delta.hi};
    if (with_ws) v.push_back(w_s.hi);
    return v;
}

std::vector<double> pack_params(const domain::KernelParams& p, bool with_ws) {
    std::vector<double> v{p.r_d, p.r_g, p.alpha, p.beta, p.gamma, p.delta};
    if (with_ws) v.push_back(p.w_s);
    return v;
}

domain::KernelParams unpack_params(const std::vector<double>& x, bool with_ws,
                                   double default_ws) {
    const std::size_t want = with_ws ? 7 : 6;
    if (x.size() != want)
        throw InputError("parameter vector has wrong length: expected " +
                         std::to_string(want) + ", got " +
                         std::to_string(x.size()));
    KernelParams p;
    p.r_d = x[0];
    p.r_g = x[1];
    p.alpha = x[2];
    p.beta = x[3];
    p.gamma = x[4];
    p.delta = x[5];
    p.w_s = with_ws ? x[6] : default_ws;
    return p;
}

void DEConfig::validate() const {
    if (population < 4) throw InputError("population must be at least 4");
    if (!(mutation > 0.0) || mutation > 2.0)
        throw InputError("mutation factor must be in (0, 2]");
    if (crossover < 0.0 || crossover > 1.0)
        throw InputError("crossover rate must be in [0, 1]");
    if (generations < 1) throw InputError("generations must be at least 1");
    if (bins < 2) throw InputError("histogram needs at least 2 bins");
}

namespace {

/// Fold a coordinate back into [lo, hi] by reflection at the violated
/// bound. Repeated folding converges because each pass shrinks the
/// overshoot; the clamp is a safety net for pathological inputs.
double reflect(double v, double lo, double hi) {
    for (int pass = 0; pass < 64 && (v < lo || v > hi); ++pass) {
        if (v < lo) v = lo + (lo - v);
        if (v > hi) v = hi - (v - hi);
    }
    if (v < lo) v = lo;
    if (v > hi) v = hi;
    return v;
}

} // namespace

DEResult differential_evolution(
    const std::function<double(const std::vector<double>&)>& objective,
    const std::vector<double>& lower, const std::vector<double>& upper,
    const DEConfig& config) {
    config.validate();
    const std::size_t dim = lower.size();
    if (dim == 0 || upper.size() != dim)
        throw InputError("bound vectors must be non-empty and equal length");
    for (std::size_t d = 0; d < dim; ++d)
        if (!(lower[d] < upper[d]))
            throw InputError("bound " + std::to_string(d) + " must have lo < hi");

    const double inf = std::numeric_limits<double>::infinity();
    const auto np = static_cast<std::size_t>(config.population);
    Rng rng(config.seed);

    DEResult res;
    std::string first_error;
    const auto eval = [&](const std::vector<double>& x) -> double {
        try {
            return objective(x);
        } catch (const std::exception& e) {
            if (first_error.empty()) first_error = e.what();
            ++res.failed_evals;
            return inf;
        }
    };

    std::vector<std::vector<double>> pop(np, std::vector<double>(dim));
    std::vector<double> fitness(np);
    for (std::size_t i = 0; i < np; ++i) {
        for (std::size_t d = 0; d < dim; ++d)
            pop[i][d] = rng.uniform(lower[d], upper[d]);
        if (i == 0 && !config.x0.empty()) {
            if (config.x0.size() != dim)
                throw InputError("warm start has wrong dimension: expected " +
                                 std::to_string(dim) + ", got " +
                                 std::to_string(config.x0.size()));
            for (std::size_t d = 0; d < dim; ++d)
                pop[0][d] = std::clamp(config.x0[d], lower[d], upper[d]);
        }
        fitness[i] = eval(pop[i]);
    }

    std::size_t best_i = 0;
    for (std::size_t i = 1; i < np; ++i)
        if (fitness[i] < fitness[best_i]) best_i = i;
    if (fitness[best_i] == inf)
        throw NumericError(first_error.empty()
                               ? "objective failed for the entire initial population"
                               : first_error);

    res.best = pop[best_i];
    res.best_f = fitness[best_i];
    res.history.push_back(res.best_f);

    std::vector<double> trial(dim);
    for (int g = 0; g < config.generations; ++g) {
        for (std::size_t i = 0; i < np; ++i) {
            std::size_t r1, r2, r3;
            do r1 = rng.below(np); while (r1 == i);
            do r2 = rng.below(np); while (r2 == i || r2 == r1);
            do r3 = rng.below(np); while (r3 == i || r3 == r1 || r3 == r2);

            const std::size_t jrand = rng.below(dim);
            for (std::size_t d = 0; d < dim; ++d) {
                if (rng.uniform() < config.crossover || d == jrand) {
                    const double v =
                        pop[r1][d] + config.mutation * (pop[r2][d] - pop[r3][d]);
                    trial[d] = reflect(v, lower[d], upper[d]);
                } else {
                    trial[d] = pop[i][d];
                }
            }

            const double ft = eval(trial);
            if (ft <= fitness[i]) {
                pop[i] = trial;
                fitness[i] = ft;
                if (ft < res.best_f) {
                    res.best_f = ft;
                    res.best = trial;
                }
            }
        }
        res.history.push_back(res.best_f);
    }
    return res;
}

} // namespace permafuse::optimize
