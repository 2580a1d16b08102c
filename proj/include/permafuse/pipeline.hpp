#ifndef PERMAFUSE_PIPELINE_HPP
#define PERMAFUSE_PIPELINE_HPP

#include "permafuse/cnn.hpp"
#include "permafuse/diffevo.hpp"
#include "permafuse/fusion.hpp"
#include "permafuse/objective.hpp"
#include "permafuse/relperm.hpp"
#include "permafuse/wells.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace permafuse::pipeline {

/// Input files and the artifact directory every stage writes into.
/// Empty strings mean "not provided"; stages that need a missing input
/// fail with a clear message.
struct PathsConfig {
    std::string wells;
    std::string grid;
    std::string relperm;
    std::string fluids;
    std::string seismic; ///< volume file
    std::string horizon; ///< horizon CSV
    std::string out_dir = "artifacts";
};

struct AblationConfig {
    bool enabled = true;
    /// Explicit well ids to exclude; when empty the quantile rule applies.
    std::vector<std::string> exclude_ids;
    double q_lo = 0.1;
    double q_hi = 0.9;
};

enum class QqMode { MatchWellTest, LogNormalize };

struct RunConfig {
    PathsConfig paths;
    optimize::Bounds bounds;
    optimize::DEConfig de;
    seismic::SeismicNet::Config net;
    seismic::TrainConfig train;
    std::uint64_t net_seed = 1;
    double train_percentile = 0.5;
    QqMode qq_mode = QqMode::MatchWellTest;
    std::optional<double> default_s_w; ///< used when a well has no s_w column
    AblationConfig ablation;
    bool warm_start = false;
};

RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& config, const std::string& path);

/// FNV-1a hash of the canonical JSON form; identical configs hash equal.
std::uint64_t config_hash(const RunConfig& config);

// --- small JSON (de)serializers shared by stages and the CLI --------------
domain::KernelParams load_kernel_params(const std::string& path);
void save_kernel_params(const domain::KernelParams& params,
                        const std::string& path);
optimize::Bounds load_bounds(const std::string& path);
optimize::DEConfig load_de_config(const std::string& path);

// --- library-level operations (no disk) ------------------------------------

/// Applies the mobility conversion where possible: every well with an
/// effective well-test value, no absolute value yet, and a saturation (its
/// own column or the configured default) gets k_wt_absolute filled in.
void convert_effective(std::vector<ingest::WellRecord>& wells,
                       const ingest::RelPermTable& table,
                       const ingest::FluidProps& fluids,
                       std::optional<double> default_s_w);

/// Fills k_wl_qq for every well with a well-log value: one monotone mapping
/// is built from all wells (onto the well-test distribution, or onto a
/// fitted log-normal) and applied in log10 space.
void apply_qq(std::vector<ingest::WellRecord>& wells, QqMode mode);

struct FusionRun {
    domain::KernelParams params;
    fusion::FusionResult fused;
    optimize::LoocvObjective::Detail metrics;
    std::vector<double> history;
    std::size_t failed_evals = 0;
};

FusionRun run_pure_fusion(const std::vector<ingest::WellRecord>& wells,
                          domain::GridPtr grid, const optimize::Bounds& bounds,
                          const optimize::DEConfig& de);

FusionRun run_complete_fusion(const std::vector<ingest::WellRecord>& wells,
                              domain::GridPtr grid,
                              const domain::GridMap& seismic_map,
                              const optimize::Bounds& bounds,
                              const optimize::DEConfig& de,
                              const std::optional<domain::KernelParams>&
                                  warm_start = std::nullopt);

/// Pointwise percentage difference, computed in linear mD:
/// 100 * (10^a - 10^b) / 10^b per point. Both maps must live on the same
/// grid; a zero denominator raises an error listing the offending indices.
domain::GridMap percentage_diff_map(const domain::GridMap& a,
                                    const domain::GridMap& b);

/// Well ids excluded by the quantile rule: a well is dropped when its mean
/// available log10 permeability lies strictly below the q_lo quantile or
/// strictly above the q_hi quantile over all wells.
std::vector<std::string>
ablation_exclusions(const std::vector<ingest::WellRecord>& wells, double q_lo,
                    double q_hi);

// --- workflow stages --------------------------------------------------------
// Each stage reads its inputs (raw files or earlier artifacts) and writes
// its outputs under paths.out_dir with fixed names, so a rerun of any stage
// reproduces byte-identical files and later stages can resume from disk.

void stage_ingest(const RunConfig& config);          // wells_ingested.csv
void stage_qq(const RunConfig& config);              // wells_qq.csv
void stage_optimize(const RunConfig& config);        // pure_params/history/metrics
void stage_fuse(const RunConfig& config);            // pure_map, pure_confidence
void stage_train_seismic(const RunConfig& config);   // seismic_net.ckpt, seismic_train.json
void stage_predict_seismic(const RunConfig& config); // seismic_map.csv, seismic_predict.json
void stage_complete_fusion(const RunConfig& config); // complete_* + diff vs pure
void stage_ablate(const RunConfig& config);          // ablation/ subtree
void stage_report(const RunConfig& config);          // report/ subtree

/// All stages in workflow order, skipping the seismic and ablation legs
/// when their inputs are not configured.
void run_all(const RunConfig& config);

} // namespace permafuse::pipeline

#endif
