#pragma once

// Adam training loop with the step learning-rate schedule and the
// scale / crop / flip / photometric augmentation pipeline.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "footandball/dataset.hpp"
#include "footandball/loss.hpp"
#include "footandball/model.hpp"
#include "footandball/rng.hpp"

namespace fnb {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction; moments are kept in double precision.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  /// Clears the moments for parameters of the given sizes and sets t = 0.
  void reset(const std::vector<std::size_t>& sizes);

  /// One update with step count t + 1. If any gradient is non-finite nothing
  /// is modified and a NumericError naming the parameter is thrown.
  template <typename T>
  void step(const std::vector<std::span<T>>& params, const std::vector<std::span<const T>>& grads,
            const std::vector<std::string>& names, double lr);

  const AdamConfig& config() const { return cfg_; }
  std::uint64_t t = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

 private:
  AdamConfig cfg_;
};

struct AugmentationSpec {
  double scale_min = 0.8;
  double scale_max = 1.2;
  /// Crop size in pixels; 0 picks the largest multiple of 32 that fits the
  /// smallest scaled frame.
  int crop_width = 0;
  int crop_height = 0;
  int crop_attempts = 16;
  double hflip_prob = 0.5;
  double brightness = 0.25;
  double contrast = 0.25;
  double saturation = 0.25;
  double hue_degrees = 18.0;
  double photometric_prob = 0.5;

  void validate() const;
};

struct TrainConfig {
  double lr0 = 1e-3;
  int lr_drop_epoch = 75;
  double lr_drop_factor = 10.0;
  int epochs = 100;
  int batch_size = 16;
  AdamConfig adam;
  LossWeights loss;
  bool augment = true;
  AugmentationSpec augmentation;
  std::uint64_t seed = 0;
  /// Write a checkpoint every this many epochs (0: only the final one).
  int checkpoint_every = 0;
  /// Recompute batch-norm running statistics from the unaugmented training
  /// frames under the current weights before each checkpoint.
  bool bn_recalibration = true;

  void validate() const;
};

/// lr0 before the 0-based epoch lr_drop_epoch, lr0 / lr_drop_factor from it on.
double lr_schedule(int epoch, const TrainConfig& cfg);

struct Frame {
  Image image;
  GroundTruthFrame gt;
};

/// Bilinear resize to round(W * s) x round(H * s); coordinates map through
/// x' = (x + 0.5) * sx - 0.5 with sx the realized width ratio (likewise y),
/// box sizes scale by sx, sy.
Frame scale_frame(const Frame& f, double s);
/// Crop [x0, x0 + w) x [y0, y0 + h); annotations whose center leaves the crop
/// are dropped.
Frame crop_frame(const Frame& f, int x0, int y0, int w, int h);
/// x <- W - 1 - x.
Frame hflip_frame(const Frame& f);

struct PhotometricParams {
  std::optional<double> brightness;  // multiplicative factor
  std::optional<double> contrast;    // factor around the mean luminance
  std::optional<double> saturation;  // factor around per-pixel luminance
  std::optional<double> hue_shift;   // degrees
};
Image photometric(const Image& image, const PhotometricParams& p);

/// Full pipeline in order scale, crop, flip, photometric. Throws ConfigError
/// when the crop is larger than the scaled frame.
Frame augment(const Frame& f, const AugmentationSpec& spec, int crop_width, int crop_height, Rng& rng);

/// Resolved crop size for a dataset (see AugmentationSpec::crop_width).
std::pair<int, int> resolve_crop(const AugmentationSpec& spec, const Dataset& ds);

struct EpochLog {
  int epoch;
  double lr;
  LossBreakdown loss;  // mean over the epoch's batches
};

/// One tab-separated loss-log line (no newline).
std::string format_epoch_log(const EpochLog& e);

/// Optimizer state plus the number of completed epochs; saved next to each
/// weight checkpoint so that training can resume exactly.
struct TrainState {
  Adam adam;
  int next_epoch = 0;
};

// Optimizer state file: "FNBO", u32 version, u64 config digest, u32 next
// epoch, u64 t, f64 beta1/beta2/eps, u32 count, then per parameter: u32 name
// length, name, u64 size, size x f64 m, size x f64 v.
inline constexpr std::uint32_t kOptimizerFormatVersion = 1;

template <typename T>
void save_train_state(const std::filesystem::path& path, const TrainState& state, const NetworkWeights<T>& weights);
template <typename T>
TrainState load_train_state(const std::filesystem::path& path, const NetworkWeights<T>& weights);

struct TrainHooks {
  /// Directory for checkpoints (epoch_NNNN.fnbw/.fnbo, final.fnbw/.fnbo);
  /// empty disables them.
  std::filesystem::path checkpoint_dir;
  std::function<void(const EpochLog&)> on_epoch;
  std::function<void(const std::string&)> log;
};

/// Replaces the batch-norm running statistics with the average batch
/// statistics of `ds` (dataset order, no augmentation) under the current
/// weights.
template <typename T>
void recalibrate_batchnorm(NetworkWeights<T>& weights, const Dataset& ds, int batch_size);

/// Trains `weights` in place. `state` may come from load_train_state to
/// resume; otherwise pass a default TrainState. Returns the epoch logs of
/// this call.
template <typename T>
std::vector<EpochLog> train(NetworkWeights<T>& weights, const Dataset& ds, const TrainConfig& cfg,
                            TrainState& state, const TrainHooks& hooks = {});

}  // namespace fnb
