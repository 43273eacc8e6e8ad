#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "sosvn/geometry.hpp"
#include "sosvn/phantoms.hpp"
#include "sosvn/raysim.hpp"

namespace testing {

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

inline std::vector<double> randn(std::size_t n, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, sd);
  std::vector<double> v(n);
  for (double& x : v) x = nd(rng);
  return v;
}

// Explicit dense copy of L for small problems.
inline std::vector<double> dense(const sosvn::RayMatrix& L) {
  std::vector<double> A(L.rows() * L.cols(), 0.0);
  for (const auto& t : L.triplets()) A[t.row * L.cols() + t.col] += t.value;
  return A;
}

// 12 x 16 grid with 3 mm pixels, a 16-element probe of matching pitch.
struct SmallSetup {
  sosvn::Grid grid;
  sosvn::Probe probe;
  sosvn::TxPairScheme scheme;
  SmallSetup(int n_z = 12, int n_x = 16, double h = 3e-3, int pairs = 2, int separation = 6) {
    grid.n_z = n_z;
    grid.n_x = n_x;
    grid.dz = grid.dx = h;
    probe.n_elements = n_x;
    probe.pitch = h;
    probe.center_x = grid.width() / 2;
    scheme = sosvn::TxPairScheme::nearby_pairs(probe, pairs, separation);
  }
  sosvn::RayMatrix matrix() const { return {grid, probe, scheme}; }
};

// Inverse-crime ray sample of a random training map, optionally masked.
struct RaySample {
  sosvn::SoSMap truth;
  sosvn::MeasurementSet ms;
};

inline RaySample ray_sample(const sosvn::RayMatrix& L, std::uint64_t seed, double rate = 0.0) {
  RaySample s;
  s.truth = sosvn::sample_training_map(seed, {}, L.grid());
  s.ms = sosvn::simulate_ray(s.truth, 1, L);
  if (rate > 0.0) sosvn::apply_mask(s.ms, sosvn::gen_mask_uniform(L.rows(), rate, seed + 17));
  return s;
}

}  // namespace testing
