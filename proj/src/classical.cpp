#include "sosvn/classical.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace sosvn {

void AwtvConfig::validate() const {
  if (angles_deg.empty()) throw std::invalid_argument("at least one TV angle is required");
  if (weights.size() != angles_deg.size()) throw std::invalid_argument("one weight per TV angle is required");
  for (double k : weights)
    if (!(k >= 0.0)) throw std::invalid_argument("TV weights must be >= 0");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (!(epsilon > 0.0)) throw std::invalid_argument("smoothing epsilon must be positive");
}

void LbfgsConfig::validate() const {
  if (memory < 1) throw std::invalid_argument("L-BFGS memory must be >= 1");
  if (max_iterations < 0) throw std::invalid_argument("iteration limit must be >= 0");
  if (!(armijo > 0.0 && armijo < 1.0)) throw std::invalid_argument("Armijo constant must lie in (0, 1)");
}

DirectionalDerivative::DirectionalDerivative(const Grid& grid, double angle, DerivativeKernel kernel) {
  // Axial (gz) and lateral (gx) stencils as (dz, dx, coef); each responds with
  // exactly 1 to a unit ramp along its axis.
  struct Entry {
    int dz, dx;
    double c;
  };
  std::vector<Entry> gz, gx;
  switch (kernel) {
    case DerivativeKernel::forward:
      gz = {{1, 0, 1.0}, {0, 0, -1.0}};
      gx = {{0, 1, 1.0}, {0, 0, -1.0}};
      break;
    case DerivativeKernel::sobel:
      for (int k = -1; k <= 1; ++k) {
        const double w = k == 0 ? 2.0 / 8.0 : 1.0 / 8.0;
        gz.push_back({1, k, w});
        gz.push_back({-1, k, -w});
        gx.push_back({k, 1, w});
        gx.push_back({k, -1, -w});
      }
      break;
    case DerivativeKernel::roberts:
      // r1 = x(+1,+1) - x(0,0), r2 = x(+1,0) - x(0,+1); gz = (r1 + r2)/2, gx = (r1 - r2)/2.
      gz = {{1, 1, 0.5}, {0, 0, -0.5}, {1, 0, 0.5}, {0, 1, -0.5}};
      gx = {{1, 1, 0.5}, {0, 0, -0.5}, {1, 0, -0.5}, {0, 1, 0.5}};
      break;
  }
  const double cz = std::cos(angle), cx = std::sin(angle);
  std::vector<Entry> combined;
  auto add = [&](const Entry& e, double s) {
    if (s == 0.0) return;
    for (auto& c : combined)
      if (c.dz == e.dz && c.dx == e.dx) {
        c.c += s * e.c;
        return;
      }
    combined.push_back({e.dz, e.dx, s * e.c});
  };
  for (const auto& e : gz) add(e, cz);
  for (const auto& e : gx) add(e, cx);
  // Anchors span every position where this angle's own taps fit; bounding by
  // the full kernel box would leave corner cells out of every stencil.
  int z_lo = 0, z_hi = 0, x_lo = 0, x_hi = 0;
  for (const auto& c : combined) {
    if (std::abs(c.c) < 1e-14) continue;
    if (c.dz != 0 || c.dx != 0) taps_.push_back({static_cast<std::ptrdiff_t>(c.dz) * grid.n_x + c.dx, c.c});
    z_lo = std::min(z_lo, c.dz);
    z_hi = std::max(z_hi, c.dz);
    x_lo = std::min(x_lo, c.dx);
    x_hi = std::max(x_hi, c.dx);
  }
  // Sum of coefficients is zero, so sum c_k (x_k - x_anchor) equals the stencil.
  for (int z = -z_lo; z + z_hi < grid.n_z; ++z)
    for (int x = -x_lo; x + x_hi < grid.n_x; ++x) anchors_.push_back(grid.index(z, x));
}

void DirectionalDerivative::apply(std::span<const double> x, std::span<double> out) const {
  for (std::size_t k = 0; k < anchors_.size(); ++k) {
    const std::size_t a = anchors_[k];
    double acc = 0.0;
    for (const auto& t : taps_) acc += t.coef * (x[a + t.offset] - x[a]);
    out[k] = acc;
  }
}

void DirectionalDerivative::apply_transpose(std::span<const double> y, std::span<double> out) const {
  for (std::size_t k = 0; k < anchors_.size(); ++k) {
    const std::size_t a = anchors_[k];
    for (const auto& t : taps_) {
      out[a + t.offset] += t.coef * y[k];
      out[a] -= t.coef * y[k];
    }
  }
}

AwtvObjective::AwtvObjective(const RayMatrix& L, std::span<const double> d, std::span<const std::uint8_t> mask,
                             AwtvConfig cfg)
    : L_(L), d_(d.begin(), d.end()), mask_(mask.begin(), mask.end()), cfg_(std::move(cfg)) {
  cfg_.validate();
  if (d_.size() != L.rows() || mask_.size() != L.rows())
    throw std::invalid_argument("measurement size does not match the ray matrix");
  for (double deg : cfg_.angles_deg) ops_.emplace_back(L.grid(), deg * std::numbers::pi / 180.0, cfg_.kernel);
}

ObjectiveTerms AwtvObjective::evaluate(std::span<const double> x, std::span<double> grad) const {
  const double eps = cfg_.epsilon;
  std::vector<double> r(L_.rows());
  L_.multiply(x, r);
  ObjectiveTerms t;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!mask_[i]) {
      r[i] = 0.0;
      continue;
    }
    const double e = r[i] - d_[i];
    t.data += smooth_abs(e, eps);
    r[i] = e / std::sqrt(e * e + eps);
  }
  std::fill(grad.begin(), grad.end(), 0.0);
  L_.multiply_transpose(r, grad);

  std::vector<double> g;
  for (std::size_t k = 0; k < ops_.size(); ++k) {
    const double w = cfg_.lambda * cfg_.weights[k];
    if (w == 0.0) continue;
    g.resize(ops_[k].outputs());
    ops_[k].apply(x, g);
    double sum = 0.0;
    for (double& v : g) {
      sum += smooth_abs(v, eps);
      v = w * v / std::sqrt(v * v + eps);
    }
    t.regularizer += w * sum;
    ops_[k].apply_transpose(g, grad);
  }
  t.value = t.data + t.regularizer;
  return t;
}

LbfgsResult minimize_lbfgs(const Objective& f, std::vector<double> x0, const LbfgsConfig& cfg) {
  cfg.validate();
  const std::size_t n = x0.size();
  LbfgsResult res;
  res.x = std::move(x0);
  std::vector<double> g(n), x_new(n), g_new(n), dir(n);
  double fx = f(res.x, g);
  res.history.push_back(fx);
  const double g0 = std::sqrt(std::inner_product(g.begin(), g.end(), g.begin(), 0.0));
  if (!(g0 > 0.0)) {
    res.value = fx;
    res.converged = true;
    return res;
  }

  struct Pair {
    std::vector<double> s, y;
    double rho;
  };
  std::deque<Pair> mem;
  std::vector<double> alpha(cfg.memory);
  for (int it = 0; it < cfg.max_iterations; ++it) {
    // Two-loop recursion: dir = -H g.
    dir = g;
    for (std::size_t k = mem.size(); k-- > 0;) {
      alpha[k] = mem[k].rho * std::inner_product(mem[k].s.begin(), mem[k].s.end(), dir.begin(), 0.0);
      for (std::size_t i = 0; i < n; ++i) dir[i] -= alpha[k] * mem[k].y[i];
    }
    double gamma = 1.0;
    if (!mem.empty()) {
      const auto& last = mem.back();
      gamma = std::inner_product(last.s.begin(), last.s.end(), last.y.begin(), 0.0) /
              std::inner_product(last.y.begin(), last.y.end(), last.y.begin(), 0.0);
    } else {
      gamma = 1.0 / g0;
    }
    for (double& v : dir) v *= gamma;
    for (std::size_t k = 0; k < mem.size(); ++k) {
      const double beta = mem[k].rho * std::inner_product(mem[k].y.begin(), mem[k].y.end(), dir.begin(), 0.0);
      for (std::size_t i = 0; i < n; ++i) dir[i] += mem[k].s[i] * (alpha[k] - beta);
    }
    for (double& v : dir) v = -v;
    double slope = std::inner_product(g.begin(), g.end(), dir.begin(), 0.0);
    if (!(slope < 0.0)) {
      // Not a descent direction: restart from steepest descent.
      mem.clear();
      for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i] / g0;
      slope = std::inner_product(g.begin(), g.end(), dir.begin(), 0.0);
    }

    double step = 1.0, f_new = fx;
    bool accepted = false;
    for (int bt = 0; bt < cfg.max_backtracks; ++bt) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = res.x[i] + step * dir[i];
      f_new = f(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= fx + cfg.armijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.line_search_failed = true;
      break;
    }

    Pair p{std::vector<double>(n), std::vector<double>(n), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      p.s[i] = x_new[i] - res.x[i];
      p.y[i] = g_new[i] - g[i];
    }
    const double sy = std::inner_product(p.s.begin(), p.s.end(), p.y.begin(), 0.0);
    if (sy > 0.0) {
      p.rho = 1.0 / sy;
      mem.push_back(std::move(p));
      if (static_cast<int>(mem.size()) > cfg.memory) mem.pop_front();
    }
    res.x.swap(x_new);
    g.swap(g_new);
    fx = f_new;
    res.history.push_back(fx);
    res.iterations = it + 1;
    const double gn = std::sqrt(std::inner_product(g.begin(), g.end(), g.begin(), 0.0));
    if (gn <= cfg.gradient_tolerance * g0) {
      res.converged = true;
      break;
    }
  }
  res.value = fx;
  return res;
}

ClassicalResult reconstruct_classical(const MeasurementSet& ms, const RayMatrix& L, const AwtvConfig& awtv,
                                      const LbfgsConfig& lbfgs, OffsetMode mode) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto d = absolute_delays(ms, L);
  ClassicalResult out;
  out.standardization = fit_standardization(d, ms.mask, L, mode);
  const auto d_std = standardize_measurements(d, L, out.standardization);
  const AwtvObjective objective(L, d_std, ms.mask, awtv);
  out.solver = minimize_lbfgs([&](std::span<const double> x, std::span<double> g) { return objective.evaluate(x, g).value; },
                              std::vector<double>(L.cols(), 0.0), lbfgs);
  const auto sos = slowness_to_sos(unstandardize_slowness(out.solver.x, out.standardization));
  out.diverged = sos.diverged;
  out.map.grid = L.grid();
  out.map.values = sos.sos;
  out.map.inclusion.assign(L.cols(), 0);
  out.map.meta.kind = "reconstruction";
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace sosvn
