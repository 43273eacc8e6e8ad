// Optimization sanity check on the desk profile: 2000 ray-only steps should
// cut the loss on a fixed slice of the training set by at least 5x.

#include <chrono>
#include <cstdio>
#include <vector>

#include "sosvn/config.hpp"
#include "sosvn/datagen.hpp"
#include "sosvn/vn_train.hpp"

using namespace sosvn;

namespace {

constexpr double kMinReduction = 5.0;

double fixed_slice_loss(const VNParams& params, const RayMatrix& L, const std::vector<VNSample>& set,
                        const LossConfig& loss) {
  std::vector<const VNSample*> ptrs;
  for (const auto& s : set) ptrs.push_back(&s);
  VNParams grad;
  return vn_loss_and_grad(params, L, ptrs, loss, grad).total();
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  const Profile p = builtin_profile("desk");
  const auto L = p.ray_matrix();
  const auto ds = simulate_ray_dataset(generate_maps(256, 100, p), p, L, 100);

  std::vector<VNSample> slice;
  for (std::size_t i = 0; i < 64; ++i) {
    const auto ms = augment_ray_sample(ds.measurements[i], p.grid, L.n_pairs(), p.train.augment, 4000 + i);
    slice.push_back(make_sample(ms, L, &ds.truths[i]));
  }
  std::vector<TrainingSource> sources{to_training_source(ds)};

  TrainConfig cfg = p.train;
  cfg.mix = MixSpec::ray_only();
  VNParams params = init_params(p.vn, L, cfg.seed);
  {
    std::vector<const VNSample*> warm;
    for (std::size_t i = 0; i < 16; ++i) warm.push_back(&slice[i]);
    calibrate_ranges(params, L, warm);
  }
  const double before = fixed_slice_loss(params, L, slice, cfg.loss);
  const auto res = train_from(params, cfg, L, sources, [&](const StepRecord& r, const VNParams&, const Adam&,
                                                            const RangeTracker&) {
    if (r.step % 250 == 0) std::fprintf(stderr, "  step %d batch loss %.4g\n", r.step, r.loss.total());
  });
  const double after = fixed_slice_loss(res.params, L, slice, cfg.loss);
  const double ratio = before / after;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool pass = ratio >= kMinReduction;
  std::printf("training sanity %s: loss %.4g -> %.4g after %d steps (%.2fx, need %.0fx), %.0f s\n",
              pass ? "PASS" : "FAIL", before, after, cfg.steps, ratio, kMinReduction, secs);
  return pass ? 0 : 1;
}
