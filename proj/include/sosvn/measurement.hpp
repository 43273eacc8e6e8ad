#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sosvn {

class RayMatrix;

enum class SourceTag { ray, wave_delay, full_pipeline };

const char* to_string(SourceTag tag);
SourceTag parse_source_tag(const std::string& name);

/// Differential time-of-flight measurements, pair-major like RayMatrix rows.
struct MeasurementSet {
  std::vector<double> d;             // seconds, 0 where mask is false
  std::vector<std::uint8_t> mask;    // 1 = valid
  double u = 0.0;                    // fraction of invalid entries
  SourceTag source = SourceTag::ray;
  double eta = 0.0;                  // noise level that was applied
  // Tracking-based data measure delays relative to a homogeneous medium of
  // this slowness; 0 for data that already holds absolute delays.
  double reference_slowness = 0.0;

  std::size_t size() const { return d.size(); }
  std::size_t valid_count() const;
  /// Recomputes u from the mask and zeroes d on invalid rows.
  void apply_mask();
  /// Throws std::invalid_argument when sizes disagree, d is non-finite,
  /// masked rows are nonzero, or u does not match the mask.
  void validate() const;

  static MeasurementSet fully_sampled(std::vector<double> d, SourceTag source);
};

/// Delays that satisfy L x = d for the absolute slowness x: adds
/// reference_slowness * (L 1) on valid rows.
std::vector<double> absolute_delays(const MeasurementSet& ms, const RayMatrix& L);

}  // namespace sosvn
