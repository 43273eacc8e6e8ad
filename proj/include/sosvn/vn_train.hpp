#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sosvn/measurement.hpp"
#include "sosvn/phantoms.hpp"
#include "sosvn/vn.hpp"

namespace sosvn {

struct LossConfig {
  double tau = 0.25;
  // Weight only the last layer (the tau -> infinity limit).
  bool last_layer_only = false;
  double lambda_phi = 1e5;
  double lambda_psi = 0.0;
  double eps = 1e-6;

  void validate() const;
  double layer_weight(int layer, int n_layers) const;  // layer in 1..n_layers
};

inline constexpr double kAbsSmoothing = 1e-12;

/// sum_i w_i sum_p sqrt((x_i - x*)^2 + 1e-12) over iterates x_1..x_I.
double loss_exp(std::span<const std::vector<double>> iterates, std::span<const double> target, const LossConfig& cfg);

/// Second-difference penalty on the potential knots. When `grad` is given the
/// gradient is added to its psi and phi arrays.
double loss_smooth(const VNParams& params, const LossConfig& cfg, VNParams* grad = nullptr);

struct BatchLoss {
  double data = 0.0;    // mean over the batch of loss_exp
  double smooth = 0.0;  // loss_smooth
  double total() const { return data + smooth; }
};

/// Loss of a batch and its gradient with respect to every trainable array
/// (half-ranges excluded). `grad` is overwritten.
BatchLoss vn_backward(const VNParams& params, const RayMatrix& L, const VNTape& tape,
                      std::span<const VNSample* const> samples, const LossConfig& cfg, VNParams& grad);

/// Forward and backward in one call.
BatchLoss vn_loss_and_grad(const VNParams& params, const RayMatrix& L, std::span<const VNSample* const> samples,
                           const LossConfig& cfg, VNParams& grad);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(const VNParams& like, AdamConfig cfg);
  void step(VNParams& params, const VNParams& grad);
  std::uint64_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  const VNParams& first_moment() const { return m_; }
  const VNParams& second_moment() const { return v_; }
  void restore(VNParams m, VNParams v, std::uint64_t t);

 private:
  AdamConfig cfg_;
  VNParams m_, v_;
  std::uint64_t t_ = 0;
};

/// Running average of the pre-activation level.
inline double track_level(double average, double batch_level) { return 0.95 * average + 0.05 * batch_level; }
/// Range rule applied at the interval boundaries.
inline double update_range(double average, double range) {
  if (average >= 0.95 * range && average <= 1.5 * range) return range;
  return 0.7 * range + 0.3 * average;
}

/// One running average per potential; layout matches preactivation_levels.
class RangeTracker {
 public:
  RangeTracker() = default;
  explicit RangeTracker(const VNParams& params, int interval = 1000);
  /// Updates the averages; at every `interval`-th call the ranges of `params`
  /// are revised (knot values kept as stored).
  void observe(VNParams& params, const std::vector<std::vector<double>>& levels);
  const std::vector<std::vector<double>>& averages() const { return avg_; }
  std::uint64_t batches() const { return n_; }
  int interval() const { return interval_; }
  void restore(std::vector<std::vector<double>> averages, std::uint64_t batches);

 private:
  std::vector<std::vector<double>> avg_;
  std::uint64_t n_ = 0;
  int interval_ = 1000;
};

/// Samples of one simulation source held in memory.
struct TrainingSource {
  SourceTag tag = SourceTag::ray;
  std::vector<MeasurementSet> measurements;
  std::vector<SoSMap> truths;
};

struct MixEntry {
  SourceTag tag = SourceTag::ray;
  int count = 0;
};

struct MixSpec {
  std::vector<MixEntry> entries;
  int batch_size() const;
  void validate() const;

  static MixSpec ray_only(int batch = 16);
  static MixSpec mixed();  // 11 ray, 4 full pipeline, 1 wave delay
};

/// On-the-fly corruption of ray samples.
struct RayAugmentation {
  double u_min = 0.1;
  double u_max = 0.9;
  double eta_max = 0.1;
  double sigma0 = 0.0;  // noise variance scale, s^2
};

struct TrainConfig {
  int steps = 2000;
  std::uint64_t seed = 1;
  LossConfig loss;
  AdamConfig adam;
  MixSpec mix = MixSpec::ray_only();
  RayAugmentation augment;
  int range_interval = 1000;
  int checkpoint_every = 0;  // 0: only the final checkpoint
  OffsetMode offset_mode = OffsetMode::masked;
};

/// Training presets: raw (final layer only, no smoothing, ray only),
/// exp-no-smooth, exp-smooth and exp-smooth-mixed. Empty leaves `cfg` alone.
/// Throws std::invalid_argument for other names.
void apply_variant(TrainConfig& cfg, const std::string& variant);

struct StepRecord {
  int step = 0;
  BatchLoss loss;
  std::vector<int> drawn;  // samples drawn per mix entry in this batch
};

/// Draws batches per the mix: each source is walked in a shuffled order that
/// is reshuffled once exhausted.
class BatchSampler {
 public:
  BatchSampler(std::span<const TrainingSource> sources, const MixSpec& mix, const RayAugmentation& augment,
               const RayMatrix& L, std::uint64_t seed, OffsetMode mode = OffsetMode::masked);
  /// Builds one batch of standardized samples; counts per entry go to `drawn`.
  std::vector<VNSample> next(std::vector<int>* drawn = nullptr);

 private:
  const TrainingSource& source(SourceTag tag) const;
  std::size_t draw_index(std::size_t entry);

  std::span<const TrainingSource> sources_;
  MixSpec mix_;
  RayAugmentation augment_;
  const RayMatrix* L_;
  OffsetMode mode_;
  std::uint64_t seed_;
  std::uint64_t draws_ = 0;
  std::vector<std::vector<std::size_t>> order_;
  std::vector<std::size_t> cursor_;
  std::vector<std::uint64_t> epoch_;
};

/// Ray sample corrupted per the augmentation, deterministic in `seed`.
MeasurementSet augment_ray_sample(const MeasurementSet& clean, const Grid& grid, std::size_t n_pairs,
                                  const RayAugmentation& augment, std::uint64_t seed);

using StepCallback = std::function<void(const StepRecord&, const VNParams&, const Adam&, const RangeTracker&)>;

struct TrainResult {
  VNParams params;
  std::vector<StepRecord> history;
  Adam optimizer;
  RangeTracker tracker;
};

/// Initializes (ranges calibrated on the first batch) and trains. `on_step`
/// runs after every optimizer step.
TrainResult train(const VNConfig& net, const TrainConfig& cfg, const RayMatrix& L,
                  std::span<const TrainingSource> sources, const StepCallback& on_step = {});

/// Continues training from given parameters.
TrainResult train_from(VNParams params, const TrainConfig& cfg, const RayMatrix& L,
                       std::span<const TrainingSource> sources, const StepCallback& on_step = {});

}  // namespace sosvn
