#include "sosvn/measurement.hpp"

#include <cmath>
#include <stdexcept>

#include "sosvn/geometry.hpp"

namespace sosvn {

const char* to_string(SourceTag tag) {
  switch (tag) {
    case SourceTag::ray: return "ray";
    case SourceTag::wave_delay: return "wave_delay";
    case SourceTag::full_pipeline: return "full_pipeline";
  }
  return "ray";
}

SourceTag parse_source_tag(const std::string& name) {
  if (name == "ray") return SourceTag::ray;
  if (name == "wave_delay") return SourceTag::wave_delay;
  if (name == "full_pipeline") return SourceTag::full_pipeline;
  throw std::invalid_argument("unknown source tag '" + name + "'");
}

std::size_t MeasurementSet::valid_count() const {
  std::size_t n = 0;
  for (auto m : mask) n += m ? 1 : 0;
  return n;
}

void MeasurementSet::apply_mask() {
  if (mask.size() != d.size()) throw std::invalid_argument("mask and measurement sizes differ");
  for (std::size_t i = 0; i < d.size(); ++i)
    if (!mask[i]) d[i] = 0.0;
  u = d.empty() ? 0.0 : static_cast<double>(d.size() - valid_count()) / static_cast<double>(d.size());
}

void MeasurementSet::validate() const {
  if (mask.size() != d.size()) throw std::invalid_argument("mask and measurement sizes differ");
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!std::isfinite(d[i])) throw std::invalid_argument("non-finite measurement at row " + std::to_string(i));
    if (!mask[i] && d[i] != 0.0) throw std::invalid_argument("masked row " + std::to_string(i) + " is not zero");
  }
  if (!d.empty()) {
    const double rate = static_cast<double>(d.size() - valid_count()) / static_cast<double>(d.size());
    if (std::abs(rate - u) > 1.0 / static_cast<double>(d.size()))
      throw std::invalid_argument("undersampling rate does not match the mask");
  }
}

MeasurementSet MeasurementSet::fully_sampled(std::vector<double> d, SourceTag source) {
  MeasurementSet ms;
  ms.mask.assign(d.size(), 1);
  ms.d = std::move(d);
  ms.source = source;
  ms.u = 0.0;
  return ms;
}

std::vector<double> absolute_delays(const MeasurementSet& ms, const RayMatrix& L) {
  if (ms.size() != L.rows()) throw std::invalid_argument("measurement size does not match the ray matrix");
  std::vector<double> d = ms.d;
  if (ms.reference_slowness != 0.0) {
    const auto& ones = L.ones_product();
    for (std::size_t i = 0; i < d.size(); ++i)
      if (ms.mask[i]) d[i] += ms.reference_slowness * ones[i];
  }
  return d;
}

}  // namespace sosvn
