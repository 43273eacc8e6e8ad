#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sosvn/geometry.hpp"

namespace sosvn {

/// How the homogeneous offset is fitted. `masked` restricts both inner
/// products to valid rows; `literal` keeps the unmasked denominator.
enum class OffsetMode { masked, literal };

struct Standardization {
  double k_star = 0.0;  // homogeneous-equivalent slowness
  double s_star = 1.0;  // residual scale, units of d
  std::vector<std::uint8_t> mask;
};

inline constexpr double kScaleFloor = 1e-12;

/// Throws std::invalid_argument("no valid measurements") when every row is masked.
double compute_offset(std::span<const double> d, std::span<const std::uint8_t> mask, const RayMatrix& L,
                      OffsetMode mode = OffsetMode::masked);
double compute_scale(std::span<const double> d, std::span<const std::uint8_t> mask, const RayMatrix& L,
                     double k_star);
Standardization fit_standardization(std::span<const double> d, std::span<const std::uint8_t> mask,
                                    const RayMatrix& L, OffsetMode mode = OffsetMode::masked);

/// d' = (d - k L1) / s on valid rows, 0 elsewhere.
std::vector<double> standardize_measurements(std::span<const double> d, const RayMatrix& L,
                                             const Standardization& st);
/// x' = (x - k) / s.
std::vector<double> standardize_slowness(std::span<const double> x, const Standardization& st);
/// x = s x' + k.
std::vector<double> unstandardize_slowness(std::span<const double> x_std, const Standardization& st);

struct SoSResult {
  std::vector<double> sos;
  bool diverged = false;  // some slowness was not positive; those cells hold 0
};
SoSResult slowness_to_sos(std::span<const double> slowness);

}  // namespace sosvn
