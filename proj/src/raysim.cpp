#include "sosvn/raysim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace sosvn {

MeasurementSet simulate_ray(const SoSMap& map, int factor, const RayMatrix& L) {
  if (factor < 1) throw std::invalid_argument("simulation factor must be >= 1");
  if (!(map.grid == L.grid())) throw std::invalid_argument("map grid does not match the ray matrix");
  map.validate();
  const auto x = map.slowness();
  if (factor == 1) {
    std::vector<double> d(L.rows());
    L.multiply(x, d);
    return MeasurementSet::fully_sampled(std::move(d), SourceTag::ray);
  }

  const Grid fine = map.grid.refined(factor);
  const auto x_h = upsample_nearest(x, map.grid, factor);
  const auto& scheme = L.scheme();
  const std::size_t n_fine = fine.cells();
  std::vector<double> travel(scheme.n_tx() * n_fine);
  for (std::size_t t = 0; t < scheme.n_tx(); ++t) {
    const Point src = L.probe().element(scheme.tx_elements[t]);
#pragma omp parallel for schedule(dynamic, 256)
    for (std::size_t p = 0; p < n_fine; ++p) travel[t * n_fine + p] = integrate_segment(src, fine.cell_center(p), fine, x_h);
  }
  std::vector<double> d_h(scheme.n_pairs() * n_fine);
  for (std::size_t q = 0; q < scheme.n_pairs(); ++q) {
    const auto [a, b] = scheme.pairs[q];
    for (std::size_t p = 0; p < n_fine; ++p) d_h[q * n_fine + p] = travel[a * n_fine + p] - travel[b * n_fine + p];
  }
  return MeasurementSet::fully_sampled(downsample_measurements(d_h, map.grid, factor, scheme.n_pairs()),
                                       SourceTag::ray);
}

std::vector<std::uint8_t> gen_mask_uniform(std::size_t n_rows, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw std::invalid_argument("mask rate must lie in [0, 1]");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::uint8_t> mask(n_rows);
  for (auto& m : mask) m = unit(rng) < rate ? 0 : 1;
  return mask;
}

std::vector<std::uint8_t> gen_mask_patchy(const Grid& grid, std::size_t n_pairs, double rate, std::uint64_t seed,
                                          int coarse) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw std::invalid_argument("mask rate must lie in [0, 1]");
  if (coarse < 2) throw std::invalid_argument("coarse mask size must be >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n_pix = grid.cells();
  const auto n_off = static_cast<std::size_t>(std::lround(rate * static_cast<double>(n_pix)));
  std::vector<std::uint8_t> mask(n_pairs * n_pix, 1);
  std::vector<double> field(static_cast<std::size_t>(coarse) * coarse), fine(n_pix);
  std::vector<std::size_t> order(n_pix);
  for (std::size_t q = 0; q < n_pairs; ++q) {
    for (double& v : field) v = unit(rng);
    // Bilinear upsampling with the coarse corners on the outer pixel centers.
    for (int z = 0; z < grid.n_z; ++z) {
      const double fz = static_cast<double>(z) * (coarse - 1) / (grid.n_z - 1);
      const int z0 = std::min(static_cast<int>(fz), coarse - 2);
      const double wz = fz - z0;
      for (int x = 0; x < grid.n_x; ++x) {
        const double fx = static_cast<double>(x) * (coarse - 1) / (grid.n_x - 1);
        const int x0 = std::min(static_cast<int>(fx), coarse - 2);
        const double wx = fx - x0;
        auto at = [&](int i, int j) { return field[static_cast<std::size_t>(i) * coarse + j]; };
        fine[grid.index(z, x)] = (1 - wz) * ((1 - wx) * at(z0, x0) + wx * at(z0, x0 + 1)) +
                                 wz * ((1 - wx) * at(z0 + 1, x0) + wx * at(z0 + 1, x0 + 1));
      }
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return fine[i] < fine[j]; });
    for (std::size_t k = 0; k < n_off; ++k) mask[q * n_pix + order[k]] = 0;
  }
  return mask;
}

void apply_mask(MeasurementSet& ms, const std::vector<std::uint8_t>& mask) {
  if (mask.size() != ms.d.size()) throw std::invalid_argument("mask size does not match the measurements");
  for (std::size_t i = 0; i < mask.size(); ++i) ms.mask[i] = ms.mask[i] && mask[i];
  ms.apply_mask();
}

void add_noise(MeasurementSet& ms, double eta, std::uint64_t seed, double sigma0) {
  if (eta < 0.0) throw std::invalid_argument("noise level must be >= 0");
  if (sigma0 < 0.0) throw std::invalid_argument("noise unit must be >= 0");
  ms.eta = eta;
  if (eta == 0.0 || sigma0 == 0.0) return;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, std::sqrt(eta * sigma0));
  for (std::size_t i = 0; i < ms.d.size(); ++i)
    if (ms.mask[i]) ms.d[i] += noise(rng);
}

double morans_i(const std::vector<std::uint8_t>& mask, const Grid& grid, std::size_t pair) {
  const std::size_t n = grid.cells();
  if (mask.size() < (pair + 1) * n) throw std::invalid_argument("mask too short for the requested pair");
  const std::uint8_t* m = mask.data() + pair * n;
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += m[i];
  mean /= static_cast<double>(n);
  double denom = 0.0;
  for (std::size_t i = 0; i < n; ++i) denom += (m[i] - mean) * (m[i] - mean);
  if (denom == 0.0) return 0.0;
  double num = 0.0, w = 0.0;
  for (int z = 0; z < grid.n_z; ++z)
    for (int x = 0; x < grid.n_x; ++x) {
      const double a = m[grid.index(z, x)] - mean;
      if (x + 1 < grid.n_x) {
        num += 2.0 * a * (m[grid.index(z, x + 1)] - mean);
        w += 2.0;
      }
      if (z + 1 < grid.n_z) {
        num += 2.0 * a * (m[grid.index(z + 1, x)] - mean);
        w += 2.0;
      }
    }
  return static_cast<double>(n) / w * num / denom;
}

}  // namespace sosvn
