#ifndef PERMAFUSE_OBJECTIVE_HPP
#define PERMAFUSE_OBJECTIVE_HPP

#include "permafuse/fusion.hpp"
#include "permafuse/geometry.hpp"
#include "permafuse/kernels.hpp"
#include "permafuse/wells.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace permafuse::optimize {

/// Normalized histogram distance between two samples: shared equal-width
/// bins over the combined range, frequencies p and p_hat, result
/// (1/sqrt(2)) * sqrt(sum_b |p_b - p_hat_b|). Lies in [0, 1].
double hist_distance_l1(const std::vector<double>& k,
                        const std::vector<double>& k_hat, int bins);

/// |range(k) - range(k_hat)| normalized by the maximum over both samples.
/// Throws NumericError("degenerate normalization") when that maximum is
/// not positive.
double range_penalty_l2(const std::vector<double>& k,
                        const std::vector<double>& k_hat);

struct Metrics {
    double mse = 0.0;
    double r2 = 0.0;
};

/// MSE and R^2 of k_hat against reference k (R^2 = 1 - SS_res/SS_tot).
Metrics metrics(const std::vector<double>& k, const std::vector<double>& k_hat);

/// Leave-one-out cross-validation objective for kernel parameters.
///
/// For a parameter vector: fuse the full map once, fuse a map without each
/// well in turn, and score the drainage-averaged synthetic well tests of
/// the leave-one-out maps (k_hat) against those of the full map (k):
///
///     f = 1 - R^2(k, k_hat) + c1 * l1 + c2 * l2.
///
/// Distances from wells to grid points and the synthetic-test weights are
/// cached at construction; each evaluation computes every kernel weight
/// once and assembles the leave-one-out maps from prefix and suffix
/// partial sums of the per-well contributions.
class LoocvObjective {
public:
    LoocvObjective(const std::vector<ingest::WellRecord>& wells,
                   domain::GridPtr grid,
                   std::optional<domain::GridMap> seismic_map, double c1 = 0.1,
                   double c2 = 0.1, int bins = 20,
                   double r_dr = fusion::kSyntheticTestRadius);

    struct Detail {
        std::vector<double> k;     ///< full-map synthetic tests per well
        std::vector<double> k_hat; ///< leave-one-out synthetic tests
        double r2 = 0.0;
        double mse = 0.0;
        double l1 = 0.0;
        double l2 = 0.0;
        double f = 0.0;
    };

    Detail evaluate(const domain::KernelParams& params) const;
    double operator()(const domain::KernelParams& params) const {
        return evaluate(params).f;
    }

    std::size_t well_count() const { return ids_.size(); }
    const std::vector<std::string>& well_ids() const { return ids_; }
    bool has_seismic() const { return !seismic_.empty(); }

private:
    domain::GridPtr grid_;
    std::vector<std::string> ids_; ///< usable wells in id order
    std::vector<char> has_wt_, has_wl_;
    std::vector<double> wt_log_, wl_log_;
    std::vector<double> dist_;    ///< well-major distance to each grid point
    std::vector<double> drain_w_;   ///< exp(-d/r_dr), same layout
    std::vector<double> drain_sum_; ///< per-well weight total
    std::vector<double> seismic_; ///< empty when fusing without seismic
    double c1_, c2_;
    int bins_;
};

/// One-shot form of the objective; prefer the class when evaluating many
/// parameter vectors on the same data.
double loocv_objective(const domain::KernelParams& params,
                       const std::vector<ingest::WellRecord>& wells,
                       domain::GridPtr grid,
                       const std::optional<domain::GridMap>& seismic_map,
                       double c1 = 0.1, double c2 = 0.1, int bins = 20);

} // namespace permafuse::optimize

#endif
