#include "permafuse/cubes.hpp"
#include "permafuse/common.hpp"

#include <algorithm>
#include <cmath>

namespace permafuse::seismic {

using domain::GridMap;
using domain::Point2;
using ingest::SeismicVolume;

RmsCube extract_cube(const SeismicVolume& volume, const Point2& point) {
    const long i = std::lround((point.x - volume.origin_x) / volume.dx);
    const long j = std::lround((point.y - volume.origin_y) / volume.dy);
    const double zc = volume.horizon_at(point.x, point.y);
    const long z0 = static_cast<long>(
        std::floor(zc - static_cast<double>(RmsCube::NZ) / 2.0 + 1.0));

    const long hx = static_cast<long>(RmsCube::NX) / 2;
    const long hy = static_cast<long>(RmsCube::NY) / 2;
    if (i - hx < 0 || i + hx >= static_cast<long>(volume.ni) || j - hy < 0 ||
        j + hy >= static_cast<long>(volume.nx) || z0 < 0 ||
        z0 + static_cast<long>(RmsCube::NZ) > static_cast<long>(volume.nz))
        throw InputError("cube out of volume");

    RmsCube cube;
    cube.v.resize(RmsCube::SIZE);
    cube.cx = point.x;
    cube.cy = point.y;
    cube.cz = zc;
    for (std::size_t x = 0; x < RmsCube::NX; ++x)
        for (std::size_t y = 0; y < RmsCube::NY; ++y)
            for (std::size_t z = 0; z < RmsCube::NZ; ++z)
                cube.v[(x * RmsCube::NY + y) * RmsCube::NZ + z] = volume.at(
                    static_cast<std::size_t>(i - hx) + x,
                    static_cast<std::size_t>(j - hy) + y,
                    static_cast<std::size_t>(z0) + z);
    return cube;
}

std::vector<TrainSample> build_training_set(const GridMap& confidence_map,
                                            const GridMap& fused_map,
                                            const SeismicVolume& volume,
                                            double percentile) {
    if (confidence_map.size() != fused_map.size())
        throw InputError("confidence and fused maps differ in size");
    if (percentile < 0.0 || percentile >= 1.0)
        throw InputError("percentile must be in [0, 1)");

    const std::size_t n = confidence_map.size();
    std::vector<double> sorted = confidence_map.values();
    std::sort(sorted.begin(), sorted.end());

    std::vector<TrainSample> samples;
    for (std::size_t idx = 0; idx < n; ++idx) {
        const double c = confidence_map.value(idx);
        // Rank by strict dominance: the fraction of points below c must
        // reach the requested percentile.
        const auto below = static_cast<std::size_t>(
            std::lower_bound(sorted.begin(), sorted.end(), c) - sorted.begin());
        if (static_cast<double>(below) < percentile * static_cast<double>(n))
            continue;
        TrainSample s;
        const Point2& p = confidence_map.grid().point(idx);
        try {
            s.cube = extract_cube(volume, p);
        } catch (const InputError&) {
            continue;
        }
        s.x = p.x;
        s.y = p.y;
        s.target = fused_map.value(idx);
        s.confidence = c;
        samples.push_back(std::move(s));
    }
    if (samples.empty()) throw InputError("empty training set");
    return samples;
}

} // namespace permafuse::seismic
