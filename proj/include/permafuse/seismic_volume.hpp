#ifndef PERMAFUSE_SEISMIC_VOLUME_HPP
#define PERMAFUSE_SEISMIC_VOLUME_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace permafuse::ingest {

/// 3D RMS-amplitude volume with georeferencing and a horizon surface.
/// Samples are stored (inline, crossline, sample) with the sample axis
/// contiguous; trace (i, j) sits at (origin_x + i*dx, origin_y + j*dy).
/// The horizon gives the formation-center z-sample per trace.
struct SeismicVolume {
    std::size_t ni = 0; ///< inline count
    std::size_t nx = 0; ///< crossline count
    std::size_t nz = 0; ///< samples per trace
    double origin_x = 0.0;
    double origin_y = 0.0;
    double dx = 25.0;
    double dy = 25.0;
    double dz_ms = 2.0;
    std::vector<float> data;      ///< ni * nx * nz amplitudes
    std::vector<double> horizon;  ///< ni * nx center z-samples

    float at(std::size_t i, std::size_t j, std::size_t k) const {
        return data[(i * nx + j) * nz + k];
    }
    float& at(std::size_t i, std::size_t j, std::size_t k) {
        return data[(i * nx + j) * nz + k];
    }

    /// Horizon z at an arbitrary map position: bilinear interpolation
    /// between the four surrounding traces, nearest-neighbor outside the
    /// trace lattice.
    double horizon_at(double x, double y) const;

    void validate() const;
};

/// Volume file: one JSON header line {ni, nx, nz, origin_x, origin_y, dx,
/// dy, dz_ms} followed by the little-endian 32-bit-float payload in
/// (inline, crossline, sample) order. Horizon file: CSV `x,y,z_index`
/// covering every trace.
SeismicVolume load_seismic(const std::string& volume_path,
                           const std::string& horizon_path);
void save_seismic(const SeismicVolume& volume, const std::string& volume_path,
                  const std::string& horizon_path);

} // namespace permafuse::ingest

#endif
