#ifndef PERMAFUSE_CUBES_HPP
#define PERMAFUSE_CUBES_HPP

#include "permafuse/geometry.hpp"
#include "permafuse/seismic_volume.hpp"

#include <vector>

namespace permafuse::seismic {

/// Fixed-size RMS-amplitude window around one map point, the network's
/// volumetric input. Stored (x, y, z) with z contiguous.
struct RmsCube {
    static constexpr std::size_t NX = 9;
    static constexpr std::size_t NY = 9;
    static constexpr std::size_t NZ = 46;
    static constexpr std::size_t SIZE = NX * NY * NZ;

    std::vector<double> v; ///< SIZE amplitudes
    double cx = 0.0;       ///< center x, map coordinates
    double cy = 0.0;       ///< center y
    double cz = 0.0;       ///< center z-sample

    double at(std::size_t x, std::size_t y, std::size_t z) const {
        return v[(x * NY + y) * NZ + z];
    }
};

/// Cut the (9, 9, 46) window centered at the trace nearest to `point` and
/// at the horizon z-sample there. Throws InputError("cube out of volume")
/// when the window does not fit.
RmsCube extract_cube(const ingest::SeismicVolume& volume,
                     const domain::Point2& point);

struct TrainSample {
    RmsCube cube;
    double x = 0.0;      ///< map coordinates of the grid point
    double y = 0.0;
    double target = 0.0; ///< fused log10 mD
    double confidence = 0.0;
};

/// Select the grid points whose confidence rank is at or above `percentile`
/// (strictly-below-count rank, so percentile 0 selects everything and ties
/// at a single value select nothing for percentile > 0), extract a cube for
/// each, and pair it with the fused value as the training target. Points
/// whose cube falls outside the volume are skipped. Throws
/// InputError("empty training set") when nothing survives.
std::vector<TrainSample> build_training_set(const domain::GridMap& confidence_map,
                                            const domain::GridMap& fused_map,
                                            const ingest::SeismicVolume& volume,
                                            double percentile);

} // namespace permafuse::seismic

#endif
