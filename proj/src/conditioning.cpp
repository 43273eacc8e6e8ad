#include "sosvn/conditioning.hpp"

#include <cmath>
#include <stdexcept>

namespace sosvn {

namespace {

void check_sizes(std::span<const double> d, std::span<const std::uint8_t> mask, const RayMatrix& L) {
  if (d.size() != L.rows() || mask.size() != L.rows())
    throw std::invalid_argument("measurement size does not match the ray matrix");
}

}  // namespace

double compute_offset(std::span<const double> d, std::span<const std::uint8_t> mask, const RayMatrix& L,
                      OffsetMode mode) {
  check_sizes(d, mask, L);
  const auto& ones = L.ones_product();
  double num = 0.0, den = 0.0;
  std::size_t valid = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (mask[i]) {
      num += d[i] * ones[i];
      ++valid;
    }
    if (mask[i] || mode == OffsetMode::literal) den += ones[i] * ones[i];
  }
  if (valid == 0) throw std::invalid_argument("no valid measurements");
  if (!(den > 0.0)) throw std::invalid_argument("L1 vanishes on the valid rows");
  return num / den;
}

double compute_scale(std::span<const double> d, std::span<const std::uint8_t> mask, const RayMatrix& L,
                     double k_star) {
  check_sizes(d, mask, L);
  const auto& ones = L.ones_product();
  double rss = 0.0;
  std::size_t valid = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!mask[i]) continue;
    const double r = d[i] - k_star * ones[i];
    rss += r * r;
    ++valid;
  }
  if (valid == 0) throw std::invalid_argument("no valid measurements");
  return std::max(std::sqrt(rss / static_cast<double>(valid)), kScaleFloor);
}

Standardization fit_standardization(std::span<const double> d, std::span<const std::uint8_t> mask,
                                    const RayMatrix& L, OffsetMode mode) {
  Standardization st;
  st.k_star = compute_offset(d, mask, L, mode);
  st.s_star = compute_scale(d, mask, L, st.k_star);
  st.mask.assign(mask.begin(), mask.end());
  return st;
}

std::vector<double> standardize_measurements(std::span<const double> d, const RayMatrix& L,
                                             const Standardization& st) {
  check_sizes(d, st.mask, L);
  const auto& ones = L.ones_product();
  std::vector<double> out(d.size(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i)
    if (st.mask[i]) out[i] = (d[i] - st.k_star * ones[i]) / st.s_star;
  return out;
}

std::vector<double> standardize_slowness(std::span<const double> x, const Standardization& st) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - st.k_star) / st.s_star;
  return out;
}

std::vector<double> unstandardize_slowness(std::span<const double> x_std, const Standardization& st) {
  std::vector<double> out(x_std.size());
  for (std::size_t i = 0; i < x_std.size(); ++i) out[i] = st.s_star * x_std[i] + st.k_star;
  return out;
}

SoSResult slowness_to_sos(std::span<const double> slowness) {
  SoSResult r;
  r.sos.resize(slowness.size());
  for (std::size_t i = 0; i < slowness.size(); ++i) {
    if (slowness[i] > 0.0 && std::isfinite(slowness[i])) {
      r.sos[i] = 1.0 / slowness[i];
    } else {
      r.sos[i] = 0.0;
      r.diverged = true;
    }
  }
  return r;
}

}  // namespace sosvn
