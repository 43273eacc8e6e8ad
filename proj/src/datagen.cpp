#include "sosvn/datagen.hpp"

#include <stdexcept>

#include "sosvn/conditioning.hpp"
#include "sosvn/raysim.hpp"

namespace sosvn {

std::vector<SoSMap> generate_maps(std::size_t n, std::uint64_t seed, const Profile& profile) {
  std::vector<SoSMap> maps;
  maps.reserve(n);
  for (std::size_t i = 0; i < n; ++i) maps.push_back(sample_training_map(seed + i, profile.maps, profile.grid));
  return maps;
}

namespace {

Dataset empty_dataset(const Profile& profile, SourceTag tag, std::uint64_t seed) {
  Dataset ds;
  ds.grid = profile.grid;
  ds.probe = profile.probe;
  ds.scheme = profile.scheme.build(profile.probe);
  ds.source = tag;
  ds.seed = seed;
  return ds;
}

void describe_wave(Dataset& ds, const WaveSimConfig& w) {
  ds.extra.emplace_back("f_c", format_double(w.f_c));
  ds.extra.emplace_back("refine", std::to_string(w.refine));
  ds.extra.emplace_back("sponge", std::to_string(w.sponge));
  ds.extra.emplace_back("sponge_strength", format_double(w.sponge_strength));
  ds.extra.emplace_back("cfl", format_double(w.cfl));
}

}  // namespace

Dataset simulate_ray_dataset(const std::vector<SoSMap>& maps, const Profile& profile, const RayMatrix& L,
                             std::uint64_t seed) {
  Dataset ds = empty_dataset(profile, SourceTag::ray, seed);
  if (!(L.grid() == profile.grid)) throw std::invalid_argument("ray matrix grid differs from the profile grid");
  ds.extra.emplace_back("ray_factor", std::to_string(profile.ray_factor));
  ds.measurements.resize(maps.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < maps.size(); ++i) ds.measurements[i] = simulate_ray(maps[i], profile.ray_factor, L);
  ds.truths = maps;
  return ds;
}

Dataset simulate_wave_delay_dataset(const std::vector<SoSMap>& maps, const Profile& profile, std::uint64_t seed,
                                    const Progress& progress) {
  Dataset ds = empty_dataset(profile, SourceTag::wave_delay, seed);
  describe_wave(ds, profile.wave);
  for (std::size_t i = 0; i < maps.size(); ++i) {
    ds.measurements.push_back(wave_delay_measurements(maps[i], ds.probe, ds.scheme, profile.wave));
    if (progress) progress(i + 1, maps.size());
  }
  ds.truths = maps;
  return ds;
}

Dataset simulate_full_pipeline_dataset(const std::vector<SoSMap>& maps, const Profile& profile, std::uint64_t seed,
                                       const Progress& progress) {
  Dataset ds = empty_dataset(profile, SourceTag::full_pipeline, seed);
  describe_wave(ds, profile.wave);
  ds.extra.emplace_back("assumed_sos", format_double(profile.wave.assumed_sos));
  ds.extra.emplace_back("ncc_threshold", format_double(profile.wave.ncc_threshold));
  for (std::size_t i = 0; i < maps.size(); ++i) {
    ds.measurements.push_back(full_pipeline_measurements(maps[i], ds.probe, ds.scheme, seed + i, profile.wave));
    if (progress) progress(i + 1, maps.size());
  }
  ds.truths = maps;
  return ds;
}

double calibrate_sigma0(const Dataset& clean_ray, const RayMatrix& L) {
  if (clean_ray.measurements.empty()) throw std::invalid_argument("calibration needs at least one sample");
  double acc = 0.0;
  for (const auto& ms : clean_ray.measurements) {
    const auto d = absolute_delays(ms, L);
    const auto st = fit_standardization(d, ms.mask, L);
    acc += st.s_star * st.s_star;
  }
  const double power = acc / static_cast<double>(clean_ray.measurements.size());
  // 0.1 * sigma0 = power / 100
  return power / 10.0;
}

TrainingSource to_training_source(Dataset ds) {
  if (ds.truths.size() != ds.measurements.size()) throw std::invalid_argument("training data needs ground-truth maps");
  TrainingSource src;
  src.tag = ds.source;
  src.measurements = std::move(ds.measurements);
  src.truths = std::move(ds.truths);
  return src;
}

}  // namespace sosvn
