#include <doctest.h>

#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "sosvn/phantoms.hpp"
#include "sosvn/raysim.hpp"

using namespace sosvn;

namespace {

SoSMap constant_map(const Grid& g, double c) {
  SoSMap m;
  m.grid = g;
  m.values.assign(g.cells(), c);
  return m;
}

}  // namespace

TEST_CASE("homogeneous maps give block-averaged distance differences") {
  const testing::SmallSetup s;
  const RayMatrix L = s.matrix();
  const double c = 1532.0;
  const SoSMap m = constant_map(s.grid, c);
  const auto d1 = simulate_ray(m, 1, L);
  std::vector<double> lx(L.rows());
  L.multiply(m.slowness(), lx);
  CHECK(d1.d == lx);
  for (int f : {2, 3, 4}) {
    const auto df = simulate_ray(m, f, L);
    const Grid fine = s.grid.refined(f);
    for (std::size_t q = 0; q < s.scheme.n_pairs(); ++q) {
      const Point a = s.probe.element(s.scheme.tx_elements[s.scheme.pairs[q].first]);
      const Point b = s.probe.element(s.scheme.tx_elements[s.scheme.pairs[q].second]);
      for (int iz = 0; iz < s.grid.n_z; ++iz)
        for (int ix = 0; ix < s.grid.n_x; ++ix) {
          double acc = 0.0;
          for (int u = 0; u < f; ++u)
            for (int v = 0; v < f; ++v) {
              const Point p = fine.cell_center(iz * f + u, ix * f + v);
              acc += (std::hypot(p.z - a.z, p.x - a.x) - std::hypot(p.z - b.z, p.x - b.x)) / c;
            }
          const double expect = acc / (f * f);  // terms are ~1e-5 s, so cancellation leaves ~1e-21 s
          const double got = df.d[q * s.grid.cells() + s.grid.index(iz, ix)];
          CHECK(std::abs(got - expect) <= 1e-12 * std::abs(expect) + 1e-19);
        }
    }
  }
}

TEST_CASE("ray simulation converges under refinement") {
  Grid g;
  g.n_z = 28;
  g.n_x = 24;
  g.dz = g.dx = 1e-3;
  Probe p;
  p.n_elements = 48;
  p.pitch = 0.5e-3;
  p.center_x = g.width() / 2;
  const RayMatrix L(g, p, TxPairScheme::nearby_pairs(p, 3, 8));
  TrainingMapConfig cfg;
  cfg.inclusion_probability = 1.0;
  cfg.axis_min = 3e-3;
  cfg.axis_max = 6e-3;
  cfg.contrast_min = 0.05;
  const SoSMap m = sample_training_map(3, cfg, g);
  const auto d4 = simulate_ray(m, 4, L), d8 = simulate_ray(m, 8, L);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < d4.d.size(); ++i) {
    num += (d4.d[i] - d8.d[i]) * (d4.d[i] - d8.d[i]);
    den += d8.d[i] * d8.d[i];
  }
  CHECK(std::sqrt(num / den) < 0.02);
}

TEST_CASE("uniform masks") {
  CHECK(gen_mask_uniform(100, 0.0, 1) == std::vector<std::uint8_t>(100, 1));
  CHECK(gen_mask_uniform(100, 1.0, 1) == std::vector<std::uint8_t>(100, 0));
  const auto m = gen_mask_uniform(32256, 0.5, 9);
  const double off = 1.0 - std::accumulate(m.begin(), m.end(), 0.0) / 32256.0;
  CHECK(std::abs(off - 0.5) < 0.01);
}

TEST_CASE("patchy masks hit the rate per pair") {
  const Grid g;
  const double n = static_cast<double>(g.cells());
  for (double rate : {1e-6, 0.1, 0.5, 0.9}) {
    const auto m = gen_mask_patchy(g, 6, rate, 4);
    for (std::size_t q = 0; q < 6; ++q) {
      double off = 0;
      for (std::size_t i = 0; i < g.cells(); ++i) off += m[q * g.cells() + i] == 0;
      CHECK(std::abs(off / n - rate) <= 1.0 / n);
    }
  }
}

TEST_CASE("patchy masks are spatially coherent") {
  const Grid g;
  double patchy = 0.0, uniform = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto mp = gen_mask_patchy(g, 1, 0.5, s);
    const auto mu = gen_mask_uniform(g.cells(), 0.5, s);
    patchy += morans_i(mp, g, 0);
    uniform += morans_i(mu, g, 0);
  }
  CHECK(patchy / 100 > uniform / 100);
  CHECK(std::abs(uniform / 100) < 0.05);
}

TEST_CASE("masking zeroes rows and updates u") {
  MeasurementSet ms = MeasurementSet::fully_sampled(std::vector<double>(10, 2.0), SourceTag::ray);
  std::vector<std::uint8_t> mask(10, 1);
  mask[2] = mask[7] = 0;
  apply_mask(ms, mask);
  CHECK(ms.u == doctest::Approx(0.2));
  CHECK(ms.d[2] == 0.0);
  CHECK(ms.d[7] == 0.0);
  CHECK(ms.d[0] == 2.0);
  CHECK_NOTHROW(ms.validate());
}

TEST_CASE("noise has the configured variance") {
  const double sigma0 = 1.2e-16;
  MeasurementSet ms = MeasurementSet::fully_sampled(std::vector<double>(200000, 1e-7), SourceTag::ray);
  const auto clean = ms.d;
  MeasurementSet same = ms;
  add_noise(same, 0.0, 3, sigma0);
  CHECK(same.d == clean);
  add_noise(ms, 0.1, 3, sigma0);
  double ss = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) ss += (ms.d[i] - clean[i]) * (ms.d[i] - clean[i]);
  const double sd = std::sqrt(ss / clean.size());
  CHECK(sd == doctest::Approx(std::sqrt(0.1 * sigma0)).epsilon(0.02));
  CHECK(ms.eta == 0.1);
}

TEST_CASE("masked rows stay zero under noise") {
  MeasurementSet ms = MeasurementSet::fully_sampled(std::vector<double>(100, 1e-7), SourceTag::ray);
  apply_mask(ms, gen_mask_uniform(100, 0.5, 2));
  add_noise(ms, 0.1, 5, 1e-16);
  CHECK_NOTHROW(ms.validate());
}
