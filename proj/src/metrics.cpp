#include "sosvn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sosvn {

double rmse(std::span<const double> truth, std::span<const double> estimate) {
  if (truth.size() != estimate.size()) throw std::invalid_argument("maps differ in size");
  if (truth.empty()) throw std::invalid_argument("empty map");
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double e = truth[i] - estimate[i];
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(truth.size()));
}

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

Moments region(std::span<const double> map, std::span<const std::uint8_t> mask) {
  Moments m;
  std::size_t n = 0;
  for (std::size_t i = 0; i < map.size(); ++i)
    if (mask[i]) {
      m.mean += map[i];
      ++n;
    }
  if (n == 0) throw std::invalid_argument("empty region");
  m.mean /= static_cast<double>(n);
  for (std::size_t i = 0; i < map.size(); ++i)
    if (mask[i]) m.var += (map[i] - m.mean) * (map[i] - m.mean);
  m.var /= static_cast<double>(n);
  return m;
}

}  // namespace

CnrResult cnr(std::span<const double> map, std::span<const std::uint8_t> inclusion,
              std::span<const std::uint8_t> background) {
  if (inclusion.size() != map.size() || background.size() != map.size())
    throw std::invalid_argument("mask size does not match the map");
  for (std::size_t i = 0; i < map.size(); ++i)
    if (inclusion[i] && background[i]) throw std::invalid_argument("inclusion and background overlap");
  const Moments a = region(map, inclusion);
  const Moments b = region(map, background);
  const double diff = std::abs(a.mean - b.mean);
  const double den = std::sqrt(a.var + b.var);
  CnrResult r;
  if (den == 0.0) {
    r.infinite = diff != 0.0;
    r.value = r.infinite ? std::numeric_limits<double>::infinity() : 0.0;
    return r;
  }
  r.value = diff / den;
  return r;
}

std::vector<std::uint8_t> dilate(std::span<const std::uint8_t> mask, const Grid& grid, int radius) {
  if (mask.size() != grid.cells()) throw std::invalid_argument("mask size does not match the grid");
  std::vector<std::uint8_t> out(mask.size(), 0);
  for (int iz = 0; iz < grid.n_z; ++iz)
    for (int ix = 0; ix < grid.n_x; ++ix) {
      if (!mask[grid.index(iz, ix)]) continue;
      for (int z = std::max(0, iz - radius); z <= std::min(grid.n_z - 1, iz + radius); ++z)
        for (int x = std::max(0, ix - radius); x <= std::min(grid.n_x - 1, ix + radius); ++x) out[grid.index(z, x)] = 1;
    }
  return out;
}

std::vector<std::uint8_t> default_background(std::span<const std::uint8_t> inclusion, const Grid& grid) {
  auto grown = dilate(inclusion, grid, 3);
  for (auto& v : grown) v = v ? 0 : 1;
  return grown;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty set");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxStats boxplot_stats(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("boxplot of an empty set");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  BoxStats b;
  b.median = quantile_sorted(v, 0.5);
  b.q25 = quantile_sorted(v, 0.25);
  b.q75 = quantile_sorted(v, 0.75);
  const double iqr = b.q75 - b.q25;
  b.lower_whisker = b.q25 - 1.5 * iqr;
  b.upper_whisker = b.q75 + 1.5 * iqr;
  for (double x : v)
    if (x < b.lower_whisker || x > b.upper_whisker) b.outliers.push_back(x);
  return b;
}

}  // namespace sosvn
