#ifndef PERMAFUSE_FUSION_HPP
#define PERMAFUSE_FUSION_HPP

#include "permafuse/geometry.hpp"
#include "permafuse/kernels.hpp"
#include "permafuse/wells.hpp"

#include <optional>
#include <vector>

namespace permafuse::fusion {

struct FusionResult {
    domain::GridMap perm_map;       ///< log10 mD
    domain::GridMap confidence_map; ///< total kernel weight at each point
    domain::KernelParams params;
    bool used_seismic = false;
    std::size_t wells_used = 0;
};

/// Fuse well-test, well-log, and (optionally) seismic-derived permeability
/// into one map. At each grid point the value is the weighted average of
/// every available source: each well contributes its well-test value with
/// weight kernel_wt(d) and its well-log value with weight kernel_wl(d)
/// (missing measurements contribute no term), and the seismic map, when
/// present, contributes its value with constant weight w_s. All values are
/// in log10 mD. The confidence map stores the weight sum.
///
/// Wells are summed in id order, so the result is bit-identical under any
/// input permutation. Throws NumericError("uncovered grid point") when the
/// weight sum is exactly zero at some point (possible only without
/// seismic).
FusionResult fuse_map(const std::vector<ingest::WellRecord>& wells,
                      const std::optional<domain::GridMap>& seismic_map,
                      const domain::KernelParams& params, domain::GridPtr grid);

/// Drainage-weighted average of the map around a well position: weights
/// exp(-|r_j - r_i| / r_dr) over all grid points. Units follow the map.
double synthetic_well_test(const domain::GridMap& map,
                           const domain::Point2& well_position, double r_dr);

/// Radius of the synthetic-test averaging window, m.
inline constexpr double kSyntheticTestRadius = 250.0;

} // namespace permafuse::fusion

#endif
