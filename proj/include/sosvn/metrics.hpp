#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sosvn/grid.hpp"

namespace sosvn {

/// Root mean squared difference of two SoS maps, m/s.
double rmse(std::span<const double> truth, std::span<const double> estimate);

struct CnrResult {
  double value = 0.0;
  bool infinite = false;  // both regions constant with different means
};

/// |mean_inc - mean_bg| / sqrt(var_inc + var_bg), population variances.
CnrResult cnr(std::span<const double> map, std::span<const std::uint8_t> inclusion,
              std::span<const std::uint8_t> background);

/// Cells within `radius` cells (Chebyshev) of the inclusion.
std::vector<std::uint8_t> dilate(std::span<const std::uint8_t> mask, const Grid& grid, int radius);
/// Default background: everything outside the inclusion dilated by 3 cells.
std::vector<std::uint8_t> default_background(std::span<const std::uint8_t> inclusion, const Grid& grid);

/// Linear-interpolation quantile (type 7) of sorted values.
double quantile_sorted(std::span<const double> sorted, double q);

struct BoxStats {
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double lower_whisker = 0.0;  // q25 - 1.5 IQR
  double upper_whisker = 0.0;  // q75 + 1.5 IQR
  std::vector<double> outliers;
};

BoxStats boxplot_stats(std::span<const double> values);

}  // namespace sosvn
