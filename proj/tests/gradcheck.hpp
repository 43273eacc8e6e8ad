#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "sosvn/raysim.hpp"
#include "sosvn/vn_train.hpp"

namespace testing {

// Tiny network on 12 x 16 cells of 3 mm, 2 pairs, perturbed away from its
// linear initialization so every parameter family is exercised.
struct TinyNetwork {
  SmallSetup setup;
  sosvn::RayMatrix L;
  sosvn::VNParams params;
  std::vector<sosvn::VNSample> samples;

  std::vector<const sosvn::VNSample*> batch() const {
    std::vector<const sosvn::VNSample*> out;
    for (const auto& s : samples) out.push_back(&s);
    return out;
  }

  explicit TinyNetwork(int layers = 2, int filters = 4, std::uint64_t seed = 3, int n_samples = 2) : L(setup.matrix()) {
    sosvn::VNConfig c;
    c.layers = layers;
    c.filters = filters;
    c.kernel_size = 5;
    c.knots = 9;
    c.chi_knots = 5;
    params = sosvn::init_params(c, L, seed);
    const auto& g = setup.grid;
    sosvn::TrainingMapConfig tc;
    tc.axis_min = 2 * g.dx;
    tc.axis_max = 4 * g.dx;
    tc.margin = 2 * g.dx;
    tc.blur_sigma = g.dx;
    for (int s = 0; s < n_samples; ++s) {
      const auto m = sosvn::sample_training_map(seed * 10 + s, tc, g);
      auto ms = sosvn::simulate_ray(m, 1, L);
      sosvn::apply_mask(ms, sosvn::gen_mask_uniform(ms.size(), 0.3, seed + s));
      sosvn::add_noise(ms, 0.05, seed + s, 1e-16);
      samples.push_back(sosvn::make_sample(ms, L, &m));
    }
    const auto ptrs = batch();
    sosvn::calibrate_ranges(params, L, ptrs);
    std::mt19937_64 rng(seed + 2);
    std::normal_distribution<double> n;
    for (auto& l : params.layers) {
      for (double& v : l.psi) v += 0.003 * l.psi_range * n(rng);
      // curvature keeps the second differences of phi away from zero, where
      // the smoothness penalty bends on the scale of sqrt(eps)
      const int K = c.knots;
      for (std::size_t q = 0; q < l.phi.size(); ++q) {
        const double t = static_cast<double>(q % K) - 0.5 * (K - 1);
        l.phi[q] += 0.125 * t * t + 0.03 * n(rng);
      }
      for (double& v : l.chi_data) v += 0.1 * n(rng);
      for (double& v : l.chi_reg) v += 0.05 * n(rng);
      l.gamma_raw[0] = 0.3;
      for (double& v : l.weight_root) v += 0.2 * n(rng);
      for (double& v : l.kernel_mean) v = 0.2 * n(rng);
      for (double& v : l.log_precond) v += 0.1 * n(rng);
    }
    // Targets a little off the output. Small errors keep the loss, and with
    // it the rounding noise of the difference quotients, small.
    const auto tape = sosvn::vn_forward_batch(params, L, ptrs);
    for (std::size_t s = 0; s < samples.size(); ++s) {
      const auto x = sosvn::tape_iterate(tape, tape.x.size() - 1, s);
      for (std::size_t q = 0; q < x.size(); ++q) samples[s].target[q] = x[q] + 0.1 * n(rng);
    }
  }
};

// Loss used by the checks. A steeper layer weighting keeps the total small
// next to its gradients, so rounding in the quotients stays below 1e-4.
inline sosvn::LossConfig gradcheck_loss() {
  sosvn::LossConfig cfg;
  cfg.tau = 2.0;
  cfg.lambda_phi = 1.0;
  cfg.lambda_psi = 0.01;
  return cfg;
}

struct GradCheckResult {
  int checked = 0;
  int failed = 0;
  int kinks = 0;  // entries resolved by a one-sided quotient
  double worst_rel = 0.0;
  std::string worst;
};

// Central differences against vn_backward; an entry passes when it is within
// rel_tol relative or abs_tol absolute. The loss is piecewise smooth (knot
// crossings of the potentials), so where the two one-sided quotients disagree
// the analytic value must instead match one of them. stride > 1 checks every
// stride-th entry.
inline GradCheckResult gradient_check(TinyNetwork& net, const sosvn::LossConfig& cfg, double h = 1e-5,
                                      double rel_tol = 1e-4, double abs_tol = 1e-8, std::size_t stride = 1) {
  const auto ptrs = net.batch();
  sosvn::VNParams grad, scratch;
  const double base = sosvn::vn_loss_and_grad(net.params, net.L, ptrs, cfg, grad).total();
  GradCheckResult res;
  for (std::size_t i = 0; i < net.params.layers.size(); ++i) {
    std::vector<std::vector<double>*> analytic;
    grad.layers[i].for_each_array([&](const char*, std::vector<double>& w) { analytic.push_back(&w); });
    std::size_t a = 0;
    net.params.layers[i].for_each_array([&](const char* name, std::vector<double>& v) {
      const auto& g = *analytic[a++];
      for (std::size_t q = 0; q < v.size(); q += stride) {
        const double orig = v[q];
        v[q] = orig + h;
        const double lp = sosvn::vn_loss_and_grad(net.params, net.L, ptrs, cfg, scratch).total();
        v[q] = orig - h;
        const double lm = sosvn::vn_loss_and_grad(net.params, net.L, ptrs, cfg, scratch).total();
        v[q] = orig;
        const double fd = (lp - lm) / (2 * h);
        const auto close = [&](double a, double b) {
          const double diff = std::abs(a - b);
          return diff <= abs_tol || diff <= rel_tol * std::max(std::abs(a), std::abs(b));
        };
        const double rel = std::abs(g[q] - fd) / std::max({std::abs(g[q]), std::abs(fd), 1e-300});
        ++res.checked;
        if (close(g[q], fd)) continue;
        const double fwd = (lp - base) / h, bwd = (base - lm) / h;
        if (!close(fwd, bwd) && (close(g[q], fwd) || close(g[q], bwd))) {
          ++res.kinks;
          continue;
        }
        {
          ++res.failed;
          if (rel > res.worst_rel) {
            res.worst_rel = rel;
            res.worst = "layer " + std::to_string(i + 1) + " " + name + "[" + std::to_string(q) + "]";
          }
        }
      }
    });
  }
  return res;
}

}  // namespace testing
