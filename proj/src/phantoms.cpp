#include "sosvn/phantoms.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace sosvn {

namespace {

constexpr double kMinSoS = 1300.0;
constexpr double kMaxSoS = 1700.0;

// Separable Gaussian blur with edge clamping; sigma in cells.
std::vector<double> gaussian_blur(const std::vector<double>& f, int nz, int nx, double sigma) {
  if (!(sigma > 0.0)) return f;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) sum += k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& v : k) v /= sum;
  std::vector<double> tmp(f.size()), out(f.size());
  for (int z = 0; z < nz; ++z)
    for (int x = 0; x < nx; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * f[z * nx + std::clamp(x + i, 0, nx - 1)];
      tmp[z * nx + x] = acc;
    }
  for (int z = 0; z < nz; ++z)
    for (int x = 0; x < nx; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * tmp[std::clamp(z + i, 0, nz - 1) * nx + x];
      out[z * nx + x] = acc;
    }
  return out;
}

// Low-frequency field from a few plane cosines, scaled to max |f| = 1.
std::vector<double> smooth_field(const Grid& grid, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  struct Wave {
    double kz, kx, phase, amp;
  };
  std::array<Wave, 3> waves{};
  for (auto& w : waves) {
    w.kz = 2.0 * std::numbers::pi * unit(rng) / grid.depth();
    w.kx = 2.0 * std::numbers::pi * unit(rng) / grid.width();
    w.phase = 2.0 * std::numbers::pi * unit(rng);
    w.amp = unit(rng);
  }
  std::vector<double> f(grid.cells());
  double peak = 0.0;
  for (std::size_t p = 0; p < f.size(); ++p) {
    const Point c = grid.cell_center(p);
    double v = 0.0;
    for (const auto& w : waves) v += w.amp * std::cos(w.kz * c.z + w.kx * c.x + w.phase);
    f[p] = v;
    peak = std::max(peak, std::abs(v));
  }
  if (peak > 0.0)
    for (double& v : f) v /= peak;
  return f;
}

void compose(SoSMap& map, const std::vector<double>& background, const std::vector<double>& weight, double contrast) {
  map.values.resize(background.size());
  for (std::size_t p = 0; p < background.size(); ++p)
    map.values[p] = std::clamp(background[p] * (1.0 + contrast * weight[p]), kMinSoS, kMaxSoS);
}

}  // namespace

bool SoSMap::has_inclusion() const {
  return std::any_of(inclusion.begin(), inclusion.end(), [](std::uint8_t v) { return v != 0; });
}

std::vector<double> SoSMap::slowness() const {
  std::vector<double> s(values.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = 1.0 / values[i];
  return s;
}

void SoSMap::validate() const {
  grid.validate();
  // reconstructions carry no inclusion mask
  if (values.size() != grid.cells() || (!inclusion.empty() && inclusion.size() != grid.cells()))
    throw std::invalid_argument("map fields do not match the grid");
  for (double v : values)
    if (!(v >= kMinSoS && v <= kMaxSoS)) throw std::invalid_argument("speed of sound outside [1300, 1700] m/s");
}

void TrainingMapConfig::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(inclusion_probability) || !prob(smooth_probability))
    throw std::invalid_argument("probabilities must lie in [0, 1]");
  if (!(background_min > 0.0) || background_max < background_min)
    throw std::invalid_argument("invalid background range");
  if (background_variation < 0.0) throw std::invalid_argument("background variation must be >= 0");
  if (contrast_min < 0.0 || contrast_max < contrast_min || contrast_max >= 1.0)
    throw std::invalid_argument("invalid contrast range");
  if (!(axis_min > 0.0) || axis_max < axis_min) throw std::invalid_argument("invalid ellipse axis range");
  if (margin < 0.0) throw std::invalid_argument("margin must be >= 0");
  if (harmonics < 2) throw std::invalid_argument("deformation needs harmonics >= 2");
  if (deformation_max < 0.0 || deformation_max >= 1.0) throw std::invalid_argument("deformation must lie in [0, 1)");
  if (blur_sigma < 0.0) throw std::invalid_argument("blur sigma must be >= 0");
}

SoSMap sample_training_map(std::uint64_t seed, const TrainingMapConfig& config, const Grid& grid) {
  config.validate();
  grid.validate();
  if (2.0 * config.margin >= grid.depth() || 2.0 * config.margin >= grid.width())
    throw std::invalid_argument("margin leaves no room for an inclusion");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  SoSMap map;
  map.grid = grid;
  map.meta.seed = seed;
  map.meta.background_mean = uniform(config.background_min, config.background_max);
  map.meta.background_amplitude = uniform(0.0, config.background_variation);
  const auto field = smooth_field(grid, rng);
  std::vector<double> background(grid.cells());
  for (std::size_t p = 0; p < field.size(); ++p)
    background[p] = map.meta.background_mean * (1.0 + map.meta.background_amplitude * field[p]);

  // All draws happen in a fixed order so that the coins do not change the geometry.
  const bool with_inclusion = unit(rng) < config.inclusion_probability;
  const bool smooth = unit(rng) < config.smooth_probability;
  const double a = uniform(config.axis_min, config.axis_max);
  const double b = uniform(config.axis_min, config.axis_max);
  const double rot = uniform(0.0, std::numbers::pi);
  const Point center{uniform(config.margin, grid.depth() - config.margin),
                     uniform(config.margin, grid.width() - config.margin)};
  const int n_harm = config.harmonics - 1;
  std::vector<double> coef(n_harm), phase(n_harm);
  double coef_sum = 0.0;
  for (int h = 0; h < n_harm; ++h) {
    coef[h] = unit(rng);
    phase[h] = uniform(0.0, 2.0 * std::numbers::pi);
    coef_sum += coef[h];
  }
  const double deform = uniform(0.0, config.deformation_max);
  for (double& c : coef) c *= coef_sum > 0.0 ? deform / coef_sum : 0.0;
  const double magnitude = uniform(config.contrast_min, config.contrast_max);
  const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;

  map.inclusion.assign(grid.cells(), 0);
  std::vector<double> weight(grid.cells(), 0.0);
  if (with_inclusion) {
    const double cr = std::cos(rot), sr = std::sin(rot);
    for (std::size_t p = 0; p < grid.cells(); ++p) {
      const Point c = grid.cell_center(p);
      const double u = (c.z - center.z) * cr + (c.x - center.x) * sr;
      const double v = -(c.z - center.z) * sr + (c.x - center.x) * cr;
      const double theta = std::atan2(v / b, u / a);
      double radius = 1.0;
      for (int h = 0; h < n_harm; ++h) radius += coef[h] * std::cos((h + 2) * theta + phase[h]);
      const double rho = std::hypot(u / a, v / b);
      if (rho < radius) {
        map.inclusion[p] = 1;
        weight[p] = 1.0;
      }
    }
    if (smooth) weight = gaussian_blur(weight, grid.n_z, grid.n_x, config.blur_sigma / grid.dz);
    map.meta.kind = "ellipse";
    map.meta.contrast = sign * magnitude;
    map.meta.smooth = smooth;
  }
  compose(map, background, weight, map.meta.contrast);
  return map;
}

SoSMap sample_test_primitive(const PrimitiveSpec& spec, const Grid& grid) {
  grid.validate();
  if (spec.radius < 0.0 || spec.half_depth < 0.0 || spec.half_width < 0.0)
    throw std::invalid_argument("primitive extents must be >= 0");
  if (!(spec.background > 0.0)) throw std::invalid_argument("primitive background must be positive");
  const double reach = spec.kind == PrimitiveKind::circle ? spec.radius : std::hypot(spec.half_depth, spec.half_width);
  if (spec.center.z + reach < grid.origin.z || spec.center.z - reach > grid.origin.z + grid.depth() ||
      spec.center.x + reach < grid.origin.x || spec.center.x - reach > grid.origin.x + grid.width())
    throw std::invalid_argument("primitive lies entirely outside the grid");

  SoSMap map;
  map.grid = grid;
  map.meta.kind = spec.kind == PrimitiveKind::circle ? "circle" : "rectangle";
  map.meta.contrast = spec.contrast;
  map.meta.smooth = spec.blur_sigma > 0.0;
  map.meta.background_mean = spec.background;
  map.meta.background_amplitude = spec.background_variation;
  map.inclusion.assign(grid.cells(), 0);
  std::vector<double> weight(grid.cells(), 0.0), background(grid.cells());
  const double cr = std::cos(spec.angle), sr = std::sin(spec.angle);
  for (std::size_t p = 0; p < grid.cells(); ++p) {
    const Point c = grid.cell_center(p);
    const double dz = c.z - spec.center.z, dx = c.x - spec.center.x;
    bool inside = false;
    if (spec.kind == PrimitiveKind::circle) {
      inside = std::hypot(dz, dx) < spec.radius;
    } else {
      const double u = dz * cr + dx * sr, v = -dz * sr + dx * cr;
      inside = std::abs(u) < spec.half_depth && std::abs(v) < spec.half_width;
    }
    map.inclusion[p] = inside ? 1 : 0;
    weight[p] = inside ? 1.0 : 0.0;
    // Fixed tilt: slower at the top, faster at the bottom.
    const double tilt = 2.0 * (c.z - grid.origin.z) / grid.depth() - 1.0;
    background[p] = spec.background * (1.0 + spec.background_variation * tilt);
  }
  if (spec.blur_sigma > 0.0) weight = gaussian_blur(weight, grid.n_z, grid.n_x, spec.blur_sigma / grid.dz);
  compose(map, background, weight, spec.contrast);
  return map;
}

std::vector<double> upsample_nearest(const std::vector<double>& values, const Grid& grid, int factor) {
  if (factor < 1) throw std::invalid_argument("upsampling factor must be >= 1");
  if (values.size() != grid.cells()) throw std::invalid_argument("field does not match the grid");
  const int nz = grid.n_z * factor, nx = grid.n_x * factor;
  std::vector<double> out(static_cast<std::size_t>(nz) * nx);
  for (int z = 0; z < nz; ++z)
    for (int x = 0; x < nx; ++x) out[static_cast<std::size_t>(z) * nx + x] = values[grid.index(z / factor, x / factor)];
  return out;
}

}  // namespace sosvn
