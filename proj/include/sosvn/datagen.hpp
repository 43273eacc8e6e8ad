#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "sosvn/config.hpp"
#include "sosvn/container.hpp"

namespace sosvn {

/// Progress callback: (samples done, total).
using Progress = std::function<void(std::size_t, std::size_t)>;

/// Training-distribution maps; map i uses seed + i.
std::vector<SoSMap> generate_maps(std::size_t n, std::uint64_t seed, const Profile& profile);

/// Clean, fully sampled ray measurements of each map (profile.ray_factor).
Dataset simulate_ray_dataset(const std::vector<SoSMap>& maps, const Profile& profile, const RayMatrix& L,
                             std::uint64_t seed);
/// Relative transmit delays from per-transmit FDTD arrivals.
Dataset simulate_wave_delay_dataset(const std::vector<SoSMap>& maps, const Profile& profile, std::uint64_t seed,
                                    const Progress& progress = {});
/// Scatter medium, FDTD channel data, beamforming and tracking. Sample i uses
/// scatterer seed seed + i.
Dataset simulate_full_pipeline_dataset(const std::vector<SoSMap>& maps, const Profile& profile, std::uint64_t seed,
                                       const Progress& progress = {});

/// sigma0 such that eta = 0.1 yields 20 dB against the mean squared
/// homogeneous-offset residual (s*^2) of clean ray data.
double calibrate_sigma0(const Dataset& clean_ray, const RayMatrix& L);

/// Converts a dataset into in-memory training samples.
TrainingSource to_training_source(Dataset ds);

}  // namespace sosvn
