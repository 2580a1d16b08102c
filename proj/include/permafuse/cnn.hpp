#ifndef PERMAFUSE_CNN_HPP
#define PERMAFUSE_CNN_HPP

#include "permafuse/cubes.hpp"
#include "permafuse/geometry.hpp"
#include "permafuse/seismic_volume.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace permafuse::seismic {

/// Volumetric regression network: three blocks of {3D convolution (3x3x3,
/// padded in x/y, valid in z), 2x2x2 max pooling, batch normalization,
/// ReLU}, a flatten joined by the two normalized map coordinates, two dense
/// layers, and a scalar head. All arithmetic is double precision.
class SeismicNet {
public:
    struct Config {
        std::size_t c1 = 8;  ///< channels after block 1
        std::size_t c2 = 16; ///< channels after block 2
        std::size_t c3 = 32; ///< channels after block 3
        std::size_t d1 = 64; ///< first dense width
        std::size_t d2 = 32; ///< second dense width
        double bn_eps = 1e-5;
        double bn_momentum = 0.1;
    };

    /// Input scaling applied at the boundary: coordinates are min-max
    /// mapped to [-1, 1]; targets are standardized for training and
    /// de-standardized on prediction.
    struct Norm {
        double x_min = 0.0, x_max = 1.0;
        double y_min = 0.0, y_max = 1.0;
        double t_mean = 0.0, t_sd = 1.0;
    };

    SeismicNet(const Config& config, std::uint64_t seed);

    const Config& config() const { return cfg_; }
    std::uint64_t seed() const { return seed_; }
    const Norm& norm() const { return norm_; }
    void set_norm(const Norm& n) { norm_ = n; }

    std::size_t param_count() const { return params_.size(); }
    const std::vector<double>& params() const { return params_; }
    const std::vector<double>& grads() const { return grads_; }
    const std::vector<double>& running_stats() const { return running_; }
    double get_param(std::size_t i) const { return params_[i]; }
    void set_param(std::size_t i, double v) { params_[i] = v; }
    void set_params(const std::vector<double>& p);
    void set_running_stats(const std::vector<double>& s);

    /// First parameter index of the scalar head (head weights, then bias);
    /// the tail of the parameter vector from here on is a purely linear
    /// path of the loss.
    std::size_t head_offset() const { return off_head_w_; }

    /// Inference: batch normalization uses running statistics. Returns
    /// log10 mD. Throws NumericError("numerical blow-up") on non-finite
    /// activations.
    double predict(const RmsCube& cube, double x, double y) const;

    /// Training-mode forward over a mini-batch (batch statistics), returning
    /// the MSE on standardized targets. Leaves all state untouched, so it is
    /// safe as a finite-difference probe.
    double batch_loss(const std::vector<TrainSample>& batch);

    /// batch_loss plus backpropagation; parameter gradients land in
    /// grads() and the batch-norm running statistics advance one step.
    double batch_loss_and_grads(const std::vector<TrainSample>& batch);

    /// RMSProp step over all parameters using the current gradients.
    void rmsprop_step(double lr, double rho, double eps);
    void reset_optimizer_state();

    /// Round every parameter and running statistic to float32, so the
    /// in-memory net and a saved checkpoint predict identically.
    void round_to_float32();

private:
    friend void save_checkpoint(const SeismicNet&, const std::string&);
    friend SeismicNet load_checkpoint(const std::string&);

    double forward_one(const RmsCube& cube, double nx, double ny) const;
    double run_batch(const std::vector<TrainSample>& batch, bool with_grads);

    Config cfg_;
    std::uint64_t seed_ = 0;
    Norm norm_;
    std::vector<double> params_;
    std::vector<double> grads_;
    std::vector<double> running_; ///< per block: mean[c], var[c]
    std::vector<double> rms_v_;   ///< RMSProp second-moment accumulator

    // parameter layout offsets
    std::size_t off_conv_w_[3], off_conv_b_[3], off_bn_g_[3], off_bn_b_[3];
    std::size_t off_d1_w_, off_d1_b_, off_d2_w_, off_d2_b_;
    std::size_t off_head_w_, off_head_b_;
    std::size_t off_run_[3]; ///< into running_: mean, then var
    std::size_t flat_len_ = 0;
};

struct TrainConfig {
    int epochs = 60;
    std::size_t batch = 32;
    double lr = 1e-3;
    double rho = 0.9; ///< RMSProp decay
    double eps = 1e-8;
    double val_fraction = 0.2;
    /// Hold out a contiguous spatial block instead of a random subset.
    bool block_holdout = false;
    std::uint64_t seed = 1;
};

struct TrainResult {
    std::vector<double> train_loss; ///< per epoch, standardized-target MSE
    std::vector<double> val_loss;   ///< empty entries skipped when no val set
    int best_epoch = -1;
    double best_loss = std::numeric_limits<double>::infinity();
};

/// Fit the net to the samples: seeded split/shuffle, mini-batch MSE with
/// RMSProp updates, best-validation snapshot restored at the end, and a
/// final float32 round-trip of the parameters. Throws NumericError naming
/// the epoch when the loss stops being finite.
TrainResult train(SeismicNet& net, const std::vector<TrainSample>& samples,
                  const TrainConfig& config);

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::size_t worst_index = 0;
};

/// Compare analytic gradients against central finite differences on the
/// batch loss, over parameter indices [param_begin, param_end).
GradCheckResult grad_check(SeismicNet& net,
                           const std::vector<TrainSample>& samples,
                           double h = 1e-5, std::size_t param_begin = 0,
                           std::size_t param_end = SIZE_MAX);

struct PredictResult {
    domain::GridMap map; ///< log10 mD
    std::vector<unsigned char> flagged; ///< 1 = extraction failed, mean used
    std::size_t flagged_count = 0;
};

/// Predict at every grid point. Points whose cube extraction fails get the
/// mean of the successful predictions and are flagged; if every point
/// fails, throws InputError.
PredictResult predict_map(const SeismicNet& net,
                          const ingest::SeismicVolume& volume,
                          domain::GridPtr grid);

/// Checkpoint: one JSON manifest line (architecture, normalization stats,
/// seed, payload counts) + little-endian float32 payload of parameters then
/// running statistics.
void save_checkpoint(const SeismicNet& net, const std::string& path);
SeismicNet load_checkpoint(const std::string& path);

} // namespace permafuse::seismic

#endif
