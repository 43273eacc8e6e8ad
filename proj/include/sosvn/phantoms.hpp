#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sosvn/grid.hpp"

namespace sosvn {

/// How a map was generated. Stored alongside datasets.
struct MapMeta {
  std::string kind = "background";  // background | ellipse | circle | rectangle
  double contrast = 0.0;            // signed relative SoS contrast of the inclusion
  bool smooth = false;              // inclusion edge blurred
  double background_mean = 0.0;     // m/s
  double background_amplitude = 0.0;  // relative amplitude of the smooth background field
  std::uint64_t seed = 0;
};

/// Speed-of-sound map on a reconstruction grid, z-major.
struct SoSMap {
  Grid grid;
  std::vector<double> values;           // m/s
  std::vector<std::uint8_t> inclusion;  // 1 inside the inclusion; empty when unknown
  MapMeta meta;

  bool has_inclusion() const;
  std::vector<double> slowness() const;
  /// Throws std::invalid_argument on size mismatch or values outside [1300, 1700].
  void validate() const;
};

struct TrainingMapConfig {
  double inclusion_probability = 0.95;
  double smooth_probability = 0.5;
  double background_min = 1489.5;  // m/s, uniform draw; mean 1507
  double background_max = 1524.5;
  double background_variation = 0.005;  // max relative amplitude of the smooth field
  double contrast_min = 0.005;
  double contrast_max = 0.10;
  double axis_min = 2.5e-3;   // ellipse semi-axes, meters
  double axis_max = 9.0e-3;
  double margin = 3.0e-3;     // inclusion center kept this far from the grid edge
  int harmonics = 5;          // boundary deformation: harmonics 2..harmonics
  double deformation_max = 0.3;
  double blur_sigma = 1.0e-3;  // Gaussian edge blur, meters

  void validate() const;
};

SoSMap sample_training_map(std::uint64_t seed, const TrainingMapConfig& config, const Grid& grid);

enum class PrimitiveKind { circle, rectangle };

struct PrimitiveSpec {
  PrimitiveKind kind = PrimitiveKind::circle;
  Point center{};
  double radius = 0.0;       // circles
  double half_depth = 0.0;   // rectangles, extent along the rotated depth axis
  double half_width = 0.0;
  double angle = 0.0;        // rectangle rotation, radians
  double contrast = 0.0;     // relative
  double background = 1507.0;
  double background_variation = 0.0;  // relative amplitude of a fixed smooth background tilt
  double blur_sigma = 0.0;            // 0 = sharp edge
};

/// Rasterizes a single primitive: cells whose centers fall inside are marked.
SoSMap sample_test_primitive(const PrimitiveSpec& spec, const Grid& grid);

/// The shipped test suite: 28 circles followed by 4 rectangles.
std::vector<PrimitiveSpec> default_test_suite();

/// Nearest-neighbour upsampling of a per-cell field by an integer factor.
std::vector<double> upsample_nearest(const std::vector<double>& values, const Grid& grid, int factor);

}  // namespace sosvn
