#ifndef PERMAFUSE_SYNTHGEN_HPP
#define PERMAFUSE_SYNTHGEN_HPP

#include "permafuse/geometry.hpp"
#include "permafuse/relperm.hpp"
#include "permafuse/seismic_volume.hpp"
#include "permafuse/wells.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace permafuse::synthgen {

/// Generator settings for a synthetic reservoir with known ground truth.
/// All permeabilities are handled in log10 mD.
struct SynthConfig {
    std::size_t nx = 60;          ///< grid points along x
    std::size_t ny = 60;          ///< grid points along y
    double spacing = 50.0;        ///< grid spacing, m
    double corr_len_cells = 8.0;  ///< field correlation length, grid cells
    double log_mean = 2.0;        ///< target mean of log10 perm
    double log_sd = 0.5;          ///< target sd of log10 perm
    std::size_t well_count = 40;
    double well_margin_frac = 0.18; ///< wells stay this fraction away from edges
    double wl_bias = 1.3;         ///< multiplicative bias on well-log perm
    double wl_log_gain = 1.25;    ///< well-log distribution-shape mismatch
    double wl_scatter = 0.05;     ///< lognormal well-log scatter, log10 sd
    double wt_radius = 250.0;     ///< well-test drainage radius, m
    double wt_scatter = 0.05;     ///< lognormal well-test scatter, log10 sd
    double seismic_noise = 0.02;  ///< band-limited amplitude noise, sd
    std::uint64_t seed = 1;

    void validate() const;
};

domain::GridPtr make_grid(const SynthConfig& config);

/// Ground-truth log10-permeability field on make_grid(config): a seeded
/// Gaussian-bump random field standardized to exactly (log_mean, log_sd).
domain::GridMap generate_field(const SynthConfig& config);

/// Wells at distinct grid points inside the central margin box. Each record
/// carries k_wl (biased, shape-shifted, scattered), k_wt_absolute (drainage
/// average of the truth plus scatter), s_w, and the k_wt_effective implied
/// by the bundled rel-perm table and fluids.
std::vector<ingest::WellRecord> sample_wells(const domain::GridMap& truth,
                                             const SynthConfig& config);

/// RMS volume whose trace amplitude is a monotone function of the local
/// truth (constant down each trace) plus band-limited noise; flat horizon at
/// the volume mid-depth. Every grid point admits a full extraction cube.
ingest::SeismicVolume synthesize_seismic(const domain::GridMap& truth,
                                         const SynthConfig& config);

/// Corey-type rel-perm curves and fluid viscosities used for the synthetic
/// well-test effective permeabilities.
ingest::RelPermTable relperm_table();
ingest::FluidProps fluid_props();

/// Writes the complete ingest-format dataset plus ground truth:
/// grid.json, truth_map.csv, wells.csv (without the absolute column, so the
/// mobility conversion is exercised downstream), relperm.csv, fluids.json,
/// seismic.bin, horizon.csv, and a synth.json config echo.
void emit_dataset(const SynthConfig& config, const std::string& out_dir);

SynthConfig load_synth_config(const std::string& path);
void save_synth_config(const SynthConfig& config, const std::string& path);

} // namespace permafuse::synthgen

#endif
