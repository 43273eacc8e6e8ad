#include "sosvn/vn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace sosvn {

namespace pwl {

Locate locate(double z, double lo, double hi, std::size_t knots) {
  Locate l;
  const int last = static_cast<int>(knots) - 1;
  if (z <= lo) {
    l.side = z < lo ? -1 : 0;
    return l;
  }
  if (z >= hi) {
    l.side = z > hi ? 1 : 0;
    l.k = last - 1;
    l.w = 1.0;
    return l;
  }
  double t = (z - lo) / (hi - lo) * last;
  const double r = std::round(t);
  if (std::abs(t - r) < 1e-12) t = r;
  int k = static_cast<int>(std::floor(t));
  k = std::clamp(k, 0, last - 1);
  l.k = k;
  l.w = t - k;
  return l;
}

double eval(std::span<const double> y, double lo, double hi, double z) {
  const Locate l = locate(z, lo, hi, y.size());
  if (l.w == 0.0) return y[l.k];
  if (l.w == 1.0) return y[l.k + 1];
  return (1.0 - l.w) * y[l.k] + l.w * y[l.k + 1];
}

double eval(std::span<const double> y, double lo, double hi, double z, double& slope) {
  const Locate l = locate(z, lo, hi, y.size());
  const double h = (hi - lo) / static_cast<double>(y.size() - 1);
  slope = l.side == 0 ? (y[l.k + 1] - y[l.k]) / h : 0.0;
  if (l.w == 0.0) return y[l.k];
  if (l.w == 1.0) return y[l.k + 1];
  return (1.0 - l.w) * y[l.k] + l.w * y[l.k + 1];
}

void accumulate_knot_grad(std::span<double> grad, double lo, double hi, double z, double weight) {
  const Locate l = locate(z, lo, hi, grad.size());
  grad[l.k] += (1.0 - l.w) * weight;
  grad[l.k + 1] += l.w * weight;
}

}  // namespace pwl

double PiecewiseLinear::operator()(double z) const { return pwl::eval(y, lo, hi, z); }

double PiecewiseLinear::derivative(double z) const {
  double s = 0.0;
  pwl::eval(y, lo, hi, z, s);
  return s;
}

PiecewiseLinear PiecewiseLinear::ramp(int knots, double half_range, double slope) {
  if (knots < 2) throw std::invalid_argument("a piecewise-linear function needs >= 2 knots");
  if (!(half_range > 0.0)) throw std::invalid_argument("half range must be positive");
  PiecewiseLinear f;
  f.lo = -half_range;
  f.hi = half_range;
  f.y.resize(knots);
  for (int k = 0; k < knots; ++k) f.y[k] = slope * (f.lo + (f.hi - f.lo) * k / (knots - 1));
  return f;
}

PiecewiseLinear PiecewiseLinear::constant(int knots, double lo, double hi, double value) {
  if (knots < 2) throw std::invalid_argument("a piecewise-linear function needs >= 2 knots");
  if (!(hi > lo)) throw std::invalid_argument("empty interpolation range");
  return {lo, hi, std::vector<double>(knots, value)};
}

void VNConfig::validate() const {
  if (layers < 1) throw std::invalid_argument("the network needs at least one layer");
  if (filters < 0) throw std::invalid_argument("filter count must be >= 0");
  if (kernel_size < 2) throw std::invalid_argument("kernel size must be >= 2");
  if (knots < 2 || chi_knots < 2) throw std::invalid_argument("potentials need >= 2 knots");
  if (!(data_step > 0.0)) throw std::invalid_argument("initial data step must be positive");
}

double VNLayerParams::gamma() const { return 1.0 / (1.0 + std::exp(-gamma_raw[0])); }

VNParams VNParams::zeros_like() const {
  VNParams z = *this;
  for (auto& layer : z.layers) layer.for_each_array([](const char*, std::vector<double>& v) { std::fill(v.begin(), v.end(), 0.0); });
  return z;
}

void VNParams::check_compatible(const RayMatrix& L) const {
  const VNShape s{L.grid().n_z, L.grid().n_x, static_cast<int>(L.n_pairs())};
  if (!(s == shape)) throw std::invalid_argument("network parameters do not match the ray matrix dimensions");
}

std::size_t VNParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) layer.for_each_array([&](const char*, const std::vector<double>& v) { n += v.size(); });
  return n;
}

std::vector<double> standardize_kernel(std::span<const double> kernel, double mean) {
  const auto n = static_cast<double>(kernel.size());
  const double mu = std::accumulate(kernel.begin(), kernel.end(), 0.0) / n;
  double var = 0.0;
  for (double v : kernel) var += (v - mu) * (v - mu);
  const double sigma = std::sqrt(var / n);
  if (!(sigma > 0.0)) throw std::invalid_argument("kernel has zero variance");
  std::vector<double> out(kernel.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (kernel[i] - mu) / sigma + mean;
  return out;
}

void correlate_valid(std::span<const double> kernel, int k, std::span<const double> in, int n_z, int n_x,
                     std::size_t batch, std::span<double> out) {
  const int vz = n_z - k + 1, vx = n_x - k + 1;
  const std::size_t row = static_cast<std::size_t>(vx) * batch;
  std::fill(out.begin(), out.end(), 0.0);
  for (int a = 0; a < vz; ++a) {
    double* o = out.data() + static_cast<std::size_t>(a) * row;
    for (int u = 0; u < k; ++u) {
      const double* src = in.data() + static_cast<std::size_t>(a + u) * n_x * batch;
      for (int v = 0; v < k; ++v) {
        const double c = kernel[u * k + v];
        const double* s = src + static_cast<std::size_t>(v) * batch;
        for (std::size_t i = 0; i < row; ++i) o[i] += c * s[i];
      }
    }
  }
}

void correlate_valid_adjoint(std::span<const double> kernel, int k, std::span<const double> in, int n_z, int n_x,
                             std::size_t batch, std::span<double> out) {
  const int vz = n_z - k + 1, vx = n_x - k + 1;
  const std::size_t row = static_cast<std::size_t>(vx) * batch;
  for (int a = 0; a < vz; ++a) {
    const double* g = in.data() + static_cast<std::size_t>(a) * row;
    for (int u = 0; u < k; ++u) {
      double* dst = out.data() + static_cast<std::size_t>(a + u) * n_x * batch;
      for (int v = 0; v < k; ++v) {
        const double c = kernel[u * k + v];
        double* dd = dst + static_cast<std::size_t>(v) * batch;
        for (std::size_t i = 0; i < row; ++i) dd[i] += c * g[i];
      }
    }
  }
}

void correlate_kernel_grad(std::span<const double> in, std::span<const double> g, int k, int n_z, int n_x,
                           std::size_t batch, std::span<double> out) {
  const int vz = n_z - k + 1, vx = n_x - k + 1;
  const std::size_t row = static_cast<std::size_t>(vx) * batch;
  for (int u = 0; u < k; ++u)
    for (int v = 0; v < k; ++v) {
      // eight independent partial sums so the dot product vectorizes
      double acc[8] = {};
      for (int a = 0; a < vz; ++a) {
        const double* gg = g.data() + static_cast<std::size_t>(a) * row;
        const double* s = in.data() + (static_cast<std::size_t>(a + u) * n_x + v) * batch;
        std::size_t i = 0;
        for (; i + 8 <= row; i += 8)
          for (int l = 0; l < 8; ++l) acc[l] += gg[i + l] * s[i + l];
        for (; i < row; ++i) acc[i % 8] += gg[i] * s[i];
      }
      out[u * k + v] += ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    }
}

double estimate_lambda_max(const RayMatrix& L, int iterations, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  std::vector<double> v(L.cols()), Lv(L.rows()), w(L.cols());
  for (double& e : v) e = n01(rng);
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    for (double& e : v) e /= norm;
    L.multiply(v, Lv);
    L.multiply_transpose(Lv, w);
    lambda = std::inner_product(v.begin(), v.end(), w.begin(), 0.0);
    v.swap(w);
  }
  return lambda;
}

VNParams init_params(const VNConfig& config, const RayMatrix& L, std::uint64_t seed) {
  config.validate();
  VNParams p;
  p.config = config;
  p.seed = seed;
  p.shape = {L.grid().n_z, L.grid().n_x, static_cast<int>(L.n_pairs())};
  const int k = config.kernel_size;
  if (p.shape.n_z < k || p.shape.n_x < k) throw std::invalid_argument("grid smaller than the filter kernel");
  const std::size_t n_valid = static_cast<std::size_t>(p.shape.n_z - k + 1) * (p.shape.n_x - k + 1);

  // Row scaling so that the first data step is data_step / lambda_max.
  const double lambda = estimate_lambda_max(L);
  const double precond = std::sqrt(config.data_step / (config.psi_slope * lambda));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  for (int i = 0; i < config.layers; ++i) {
    VNLayerParams layer;
    layer.log_precond.assign(p.shape.rows(), std::log(precond));
    layer.psi = PiecewiseLinear::ramp(config.knots, 1.0, config.psi_slope).y;
    layer.psi_range = 1.0;
    layer.kernels.resize(static_cast<std::size_t>(config.filters) * k * k);
    for (double& v : layer.kernels) v = n01(rng);
    layer.kernel_mean.assign(config.filters, 0.0);
    layer.weight_root.assign(config.filters * n_valid, 1.0);
    layer.phi.clear();
    const auto phi0 = PiecewiseLinear::ramp(config.knots, 1.0, config.phi_slope).y;
    for (int j = 0; j < config.filters; ++j) layer.phi.insert(layer.phi.end(), phi0.begin(), phi0.end());
    layer.phi_range.assign(config.filters, 1.0);
    layer.chi_data.assign(config.chi_knots, config.chi_data);
    layer.chi_reg.assign(config.chi_knots, config.chi_reg);
    layer.gamma_raw = {config.gamma_raw};
    p.layers.push_back(std::move(layer));
  }
  return p;
}

namespace {

// Ramp knots are defined relative to the half range; rescaling the range
// keeps the knot values (slope * knot position at init time).
void set_ramp_range(std::vector<double>& y, std::size_t offset, std::size_t knots, double slope, double r) {
  for (std::size_t q = 0; q < knots; ++q)
    y[offset + q] = slope * r * (-1.0 + 2.0 * static_cast<double>(q) / static_cast<double>(knots - 1));
}

double percentile95(std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const auto idx = static_cast<std::size_t>(std::floor(0.95 * static_cast<double>(v.size() - 1)));
  std::nth_element(v.begin(), v.begin() + idx, v.end());
  return v[idx];
}

}  // namespace

VNSample make_sample(const MeasurementSet& ms, const RayMatrix& L, const SoSMap* truth, OffsetMode mode) {
  VNSample s;
  const auto d = absolute_delays(ms, L);
  s.standardization = fit_standardization(d, ms.mask, L, mode);
  s.d = standardize_measurements(d, L, s.standardization);
  s.mask = ms.mask;
  s.u = ms.u;
  if (truth) {
    if (!(truth->grid == L.grid())) throw std::invalid_argument("truth map grid does not match the ray matrix");
    s.target = standardize_slowness(truth->slowness(), s.standardization);
  }
  return s;
}

VNTape vn_forward_batch(const VNParams& params, const RayMatrix& L, std::span<const VNSample* const> samples) {
  params.check_compatible(L);
  const std::size_t B = samples.size();
  if (B == 0) throw std::invalid_argument("empty batch");
  const std::size_t n_r = L.rows(), n_px = L.cols();
  const int k = params.config.kernel_size;
  const int n_z = params.shape.n_z, n_x = params.shape.n_x;
  const std::size_t n_valid = static_cast<std::size_t>(n_z - k + 1) * (n_x - k + 1);
  const int F = params.config.filters;

  VNTape t;
  t.batch = B;
  t.d.assign(n_r * B, 0.0);
  t.mask.assign(n_r * B, 0.0);
  t.u.resize(B);
  for (std::size_t s = 0; s < B; ++s) {
    const VNSample& smp = *samples[s];
    if (smp.d.size() != n_r || smp.mask.size() != n_r) throw std::invalid_argument("sample size does not match the ray matrix");
    t.u[s] = smp.u;
    for (std::size_t i = 0; i < n_r; ++i) {
      t.mask[i * B + s] = smp.mask[i] ? 1.0 : 0.0;
      t.d[i * B + s] = smp.mask[i] ? smp.d[i] : 0.0;
    }
  }

  std::vector<double> x(n_px * B);
  L.multiply_transpose(t.d, x, B);
  std::vector<double> m(n_px * B, 0.0);
  t.x.push_back(x);
  t.mom.push_back(m);

  std::vector<double> v(n_r * B), data(n_px * B), reg(n_px * B), z(n_valid * B);
  for (const VNLayerParams& layer : params.layers) {
    std::vector<double> resid(n_r * B);
    L.multiply(x, resid, B);
    for (std::size_t i = 0; i < resid.size(); ++i) resid[i] -= t.d[i];
    const double r_psi = layer.psi_range;
    for (std::size_t i = 0; i < n_r; ++i) {
      const double P = std::exp(layer.log_precond[i]);
      for (std::size_t s = 0; s < B; ++s) {
        const std::size_t idx = i * B + s;
        if (t.mask[idx] == 0.0) {
          v[idx] = 0.0;
          continue;
        }
        const double q = P * resid[idx];
        v[idx] = P * pwl::eval(layer.psi, -r_psi, r_psi, q);
      }
    }
    L.multiply_transpose(v, data, B);

    std::fill(reg.begin(), reg.end(), 0.0);
    std::vector<double> filt(static_cast<std::size_t>(F) * n_valid * B);
    std::vector<double> kstd(static_cast<std::size_t>(F) * k * k);
    const std::size_t nk = static_cast<std::size_t>(k) * k;
    for (int j = 0; j < F; ++j) {
      const auto kj = standardize_kernel({layer.kernels.data() + j * nk, nk}, layer.kernel_mean[j]);
      std::copy(kj.begin(), kj.end(), kstd.begin() + j * nk);
      std::span<double> c(filt.data() + j * n_valid * B, n_valid * B);
      correlate_valid(kj, k, x, n_z, n_x, B, c);
      const double r = layer.phi_range[j];
      std::span<const double> phi(layer.phi.data() + j * params.config.knots, params.config.knots);
      const double* w = layer.weight_root.data() + j * n_valid;
      for (std::size_t a = 0; a < n_valid; ++a) {
        const double W = w[a] * w[a];
        for (std::size_t s = 0; s < B; ++s) z[a * B + s] = W * pwl::eval(phi, -r, r, c[a * B + s]);
      }
      correlate_valid_adjoint(kj, k, z, n_z, n_x, B, reg);
    }

    const double gamma = layer.gamma();
    std::vector<double> cd(B), cr(B);
    for (std::size_t s = 0; s < B; ++s) {
      cd[s] = pwl::eval(layer.chi_data, 0.0, 1.0, t.u[s]);
      cr[s] = pwl::eval(layer.chi_reg, 0.0, 1.0, t.u[s]);
    }
    for (std::size_t p = 0; p < n_px; ++p)
      for (std::size_t s = 0; s < B; ++s) {
        const std::size_t idx = p * B + s;
        m[idx] = gamma * m[idx] + cd[s] * data[idx] + cr[s] * reg[idx];
        x[idx] -= m[idx];
      }
    t.resid.push_back(std::move(resid));
    t.filt.push_back(std::move(filt));
    t.kernels_std.push_back(std::move(kstd));
    t.data_grad.push_back(data);
    t.reg_grad.push_back(reg);
    t.x.push_back(x);
    t.mom.push_back(m);
  }
  return t;
}

std::vector<double> tape_iterate(const VNTape& tape, std::size_t layer, std::size_t sample) {
  const auto& x = tape.x.at(layer);
  const std::size_t n = x.size() / tape.batch;
  std::vector<double> out(n);
  for (std::size_t p = 0; p < n; ++p) out[p] = x[p * tape.batch + sample];
  return out;
}

VNOutput vn_forward(const VNParams& params, const RayMatrix& L, const MeasurementSet& ms, OffsetMode mode) {
  const VNSample smp = make_sample(ms, L, nullptr, mode);
  const VNSample* ptr = &smp;
  const VNTape tape = vn_forward_batch(params, L, std::span<const VNSample* const>(&ptr, 1));
  VNOutput out;
  out.standardization = smp.standardization;
  for (std::size_t i = 1; i < tape.x.size(); ++i) out.iterates.push_back(tape_iterate(tape, i, 0));
  const auto sos = slowness_to_sos(unstandardize_slowness(out.iterates.back(), smp.standardization));
  out.diverged = sos.diverged;
  out.map.grid = L.grid();
  out.map.values = sos.sos;
  out.map.inclusion.assign(L.cols(), 0);
  out.map.meta.kind = "reconstruction";
  return out;
}

std::vector<std::vector<double>> preactivation_levels(const VNParams& params, const VNTape& tape) {
  const std::size_t B = tape.batch;
  std::vector<std::vector<double>> levels;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const VNLayerParams& layer = params.layers[i];
    std::vector<double> level;
    std::vector<double> mags;
    const auto& resid = tape.resid[i];
    const std::size_t n_r = resid.size() / B;
    mags.reserve(resid.size());
    for (std::size_t r = 0; r < n_r; ++r) {
      const double P = std::exp(layer.log_precond[r]);
      for (std::size_t s = 0; s < B; ++s)
        if (tape.mask[r * B + s] != 0.0) mags.push_back(std::abs(P * resid[r * B + s]));
    }
    level.push_back(percentile95(mags));
    const int F = params.config.filters;
    const std::size_t per = F > 0 ? tape.filt[i].size() / F : 0;
    for (int j = 0; j < F; ++j) {
      mags.assign(tape.filt[i].begin() + j * per, tape.filt[i].begin() + (j + 1) * per);
      for (double& v : mags) v = std::abs(v);
      level.push_back(percentile95(mags));
    }
    levels.push_back(std::move(level));
  }
  return levels;
}

void calibrate_ranges(VNParams& params, const RayMatrix& L, std::span<const VNSample* const> samples) {
  const std::size_t K = params.config.knots;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const VNTape tape = vn_forward_batch(params, L, samples);
    const auto levels = preactivation_levels(params, tape);
    VNLayerParams& layer = params.layers[i];
    const double floor = 1e-12;
    layer.psi_range = std::max(levels[i][0], floor);
    set_ramp_range(layer.psi, 0, K, params.config.psi_slope, layer.psi_range);
    for (int j = 0; j < params.config.filters; ++j) {
      layer.phi_range[j] = std::max(levels[i][j + 1], floor);
      set_ramp_range(layer.phi, j * K, K, params.config.phi_slope, layer.phi_range[j]);
    }
  }
}

}  // namespace sosvn
