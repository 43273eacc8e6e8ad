#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "helpers.hpp"
#include "sosvn/geometry.hpp"

using namespace sosvn;

TEST_CASE("zero-length segment has no cells") {
  Grid g;
  CHECK(trace_cell_lengths({0, 0}, {0, 0}, g).empty());
}

TEST_CASE("axis-aligned segment through a single column") {
  Grid g;
  g.n_z = 4;
  g.n_x = 1;
  g.dz = g.dx = 1e-3;
  const auto cl = trace_cell_lengths({0, 0}, {2e-3, 0}, g);
  REQUIRE(cl.size() == 2);
  CHECK(cl[0].cell == 0);
  CHECK(cl[1].cell == 1);
  CHECK(cl[0].length == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(cl[1].length == doctest::Approx(1e-3).epsilon(1e-12));
}

TEST_CASE("diagonal through cell corners visits the diagonal cells only") {
  Grid g;
  g.n_z = g.n_x = 4;
  g.dz = g.dx = 1.0;
  const auto cl = trace_cell_lengths({0, 0}, {4, 4}, g);
  REQUIRE(cl.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(cl[i].cell == g.index(i, i));
    CHECK(cl[i].length == doctest::Approx(std::sqrt(2.0)));
  }
}

TEST_CASE("segment lengths match Monte-Carlo binning") {
  Grid g;
  g.n_z = g.n_x = 5;
  g.dz = g.dx = 1.0;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.0, 5.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Point a{U(rng), U(rng)}, b{U(rng), U(rng)};
    const double len = std::hypot(b.z - a.z, b.x - a.x);
    const int n = 100000;
    std::map<std::uint32_t, double> bins;
    for (int k = 0; k < n; ++k) {
      const double t = (k + 0.5) / n;
      const int iz = std::min(4, static_cast<int>(a.z + t * (b.z - a.z)));
      const int ix = std::min(4, static_cast<int>(a.x + t * (b.x - a.x)));
      bins[g.index(iz, ix)] += len / n;
    }
    for (const auto& c : trace_cell_lengths(a, b, g)) {
      // cells clipped by less than a couple of samples are dominated by binning error
      if (c.length < 1e-3 * len) continue;
      CHECK(bins[c.cell] == doctest::Approx(c.length).epsilon(1e-4 + 2.0 * len / n / c.length));
    }
  }
}

TEST_CASE("ray lengths sum to the euclidean distance") {
  Grid g;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> Z(0.0, g.depth()), X(0.0, g.width());
  for (int k = 0; k < 1000; ++k) {
    const Point a{0.0, X(rng)}, b{Z(rng), X(rng)};
    double s = 0.0;
    for (const auto& c : trace_cell_lengths(a, b, g)) s += c.length;
    CHECK(std::abs(s - std::hypot(b.z - a.z, b.x - a.x)) < 1e-9);
  }
}

TEST_CASE("ray matrix rows are differences of two traces") {
  // smallest grid the invariants allow
  Grid g;
  g.n_z = g.n_x = 4;
  g.dz = g.dx = 1e-3;
  Probe p;
  p.n_elements = 4;
  p.pitch = 1e-3;
  p.center_x = 2e-3;
  TxPairScheme s;
  s.tx_elements = {0, 3};
  s.pairs = {{0, 1}};
  const RayMatrix L(g, p, s);
  REQUIRE(L.rows() == 16);
  REQUIRE(L.cols() == 16);
  const auto A = testing::dense(L);
  for (std::size_t px = 0; px < 16; ++px) {
    std::vector<double> expect(16, 0.0);
    for (const auto& c : trace_cell_lengths(p.element(0), g.cell_center(px), g)) expect[c.cell] += c.length;
    for (const auto& c : trace_cell_lengths(p.element(3), g.cell_center(px), g)) expect[c.cell] -= c.length;
    for (std::size_t c = 0; c < 16; ++c) CHECK(std::abs(A[px * 16 + c] - expect[c]) < 1e-15);
  }
}

TEST_CASE("default matrix dimensions") {
  Grid g;
  const Probe p = Probe::centered_on(g);
  const RayMatrix L(g, p, TxPairScheme::nearby_pairs(p));
  CHECK(L.rows() == 6u * 84u * 64u);
  CHECK(L.cols() == 5376u);
  const RayMatrix La(g, p, TxPairScheme::across_aperture(p));
  CHECK(La.rows() == 32256u);
}

TEST_CASE("homogeneous slowness gives the closed-form distance difference") {
  Grid g;
  const Probe p = Probe::centered_on(g);
  const auto scheme = TxPairScheme::nearby_pairs(p);
  const RayMatrix L(g, p, scheme);
  std::vector<double> x(L.cols(), 1.0 / 1500.0), d(L.rows());
  L.multiply(x, d);
  for (std::size_t q = 0; q < scheme.n_pairs(); ++q) {
    const Point a = p.element(scheme.tx_elements[scheme.pairs[q].first]);
    const Point b = p.element(scheme.tx_elements[scheme.pairs[q].second]);
    for (std::size_t px = 0; px < L.cols(); ++px) {
      const Point c = g.cell_center(px);
      const double expect = (std::hypot(c.z - a.z, c.x - a.x) - std::hypot(c.z - b.z, c.x - b.x)) / 1500.0;
      CHECK(std::abs(d[q * L.cols() + px] - expect) < 1e-15);
    }
  }
}

TEST_CASE("sparse products agree with the dense matrix") {
  const testing::SmallSetup s(12, 16, 1e-3, 3, 4);
  const RayMatrix L = s.matrix();
  const auto A = testing::dense(L);
  const auto x = testing::randn(L.cols(), 1);
  const auto y = testing::randn(L.rows(), 2);
  std::vector<double> lx(L.rows()), lty(L.cols());
  L.multiply(x, lx);
  L.multiply_transpose(y, lty);
  for (std::size_t r = 0; r < L.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < L.cols(); ++c) acc += A[r * L.cols() + c] * x[c];
    CHECK(std::abs(acc - lx[r]) < 1e-10 * (1.0 + std::abs(acc)));
  }
  for (std::size_t c = 0; c < L.cols(); ++c) {
    double acc = 0.0;
    for (std::size_t r = 0; r < L.rows(); ++r) acc += A[r * L.cols() + c] * y[r];
    CHECK(std::abs(acc - lty[c]) < 1e-10 * (1.0 + std::abs(acc)));
  }
}

TEST_CASE("batched products match per-sample products") {
  const testing::SmallSetup s;
  const RayMatrix L = s.matrix();
  const std::size_t B = 3;
  std::vector<double> xb(L.cols() * B), yb(L.rows() * B), outx(L.rows() * B), outy(L.cols() * B);
  std::vector<std::vector<double>> xs, ys;
  for (std::size_t b = 0; b < B; ++b) {
    xs.push_back(testing::randn(L.cols(), 10 + b));
    ys.push_back(testing::randn(L.rows(), 20 + b));
    for (std::size_t i = 0; i < L.cols(); ++i) xb[i * B + b] = xs[b][i];
    for (std::size_t i = 0; i < L.rows(); ++i) yb[i * B + b] = ys[b][i];
  }
  L.multiply(xb, outx, B);
  L.multiply_transpose(yb, outy, B);
  for (std::size_t b = 0; b < B; ++b) {
    std::vector<double> lx(L.rows()), lty(L.cols());
    L.multiply(xs[b], lx);
    L.multiply_transpose(ys[b], lty);
    for (std::size_t i = 0; i < L.rows(); ++i) CHECK(outx[i * B + b] == doctest::Approx(lx[i]).epsilon(1e-12));
    for (std::size_t i = 0; i < L.cols(); ++i) CHECK(outy[i * B + b] == doctest::Approx(lty[i]).epsilon(1e-12));
  }
}

TEST_CASE("adjoint identity <Lx, y> = <x, L^T y>") {
  Grid g;
  const Probe p = Probe::centered_on(g);
  const RayMatrix L(g, p, TxPairScheme::nearby_pairs(p));
  const auto x = testing::randn(L.cols(), 3), y = testing::randn(L.rows(), 4);
  std::vector<double> lx(L.rows()), lty(L.cols());
  L.multiply(x, lx);
  L.multiply_transpose(y, lty);
  double a = 0, b = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) a += lx[i] * y[i];
  for (std::size_t i = 0; i < lty.size(); ++i) b += x[i] * lty[i];
  CHECK(a == doctest::Approx(b).epsilon(1e-11));
}

TEST_CASE("downsampling") {
  Grid coarse;
  coarse.n_z = 3;
  coarse.n_x = 2;
  SUBCASE("factor 1 is the identity") {
    const auto d = testing::randn(2 * coarse.cells(), 1);
    CHECK(downsample_measurements(d, coarse, 1, 2) == d);
  }
  SUBCASE("constants stay constant") {
    const Grid fine = coarse.refined(2);
    const std::vector<double> d(2 * fine.cells(), 4.25);
    for (double v : downsample_measurements(d, coarse, 2, 2)) CHECK(v == doctest::Approx(4.25).epsilon(1e-15));
  }
  SUBCASE("factor 4 equals brute-force block means") {
    const int f = 4;
    const Grid fine = coarse.refined(f);
    std::vector<double> d(2 * fine.cells());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = 0.37 * static_cast<double>(i) - 3.0;
    const auto out = downsample_measurements(d, coarse, f, 2);
    for (int q = 0; q < 2; ++q)
      for (int iz = 0; iz < coarse.n_z; ++iz)
        for (int ix = 0; ix < coarse.n_x; ++ix) {
          double acc = 0.0;
          for (int a = 0; a < f; ++a)
            for (int b = 0; b < f; ++b) acc += d[q * fine.cells() + fine.index(iz * f + a, ix * f + b)];
          CHECK(out[q * coarse.cells() + coarse.index(iz, ix)] == doctest::Approx(acc / (f * f)).epsilon(1e-14));
        }
  }
}

TEST_CASE("grid and scheme validation") {
  Grid g;
  g.n_z = 0;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  Probe p;
  TxPairScheme s;
  s.tx_elements = {0, 200};
  s.pairs = {{0, 1}};
  CHECK_THROWS_AS(s.validate(p), std::invalid_argument);
}

TEST_CASE("nearby pairs keep the requested separation") {
  const Probe p;
  const auto s = TxPairScheme::nearby_pairs(p, 6, 8);
  REQUIRE(s.n_pairs() == 6);
  for (const auto& [a, b] : s.pairs) CHECK(s.tx_elements[b] - s.tx_elements[a] == 8);
  const auto w = TxPairScheme::across_aperture(p, 4);
  CHECK(w.n_pairs() == 6);
  CHECK(w.tx_elements.front() == 0);
  CHECK(w.tx_elements.back() == 127);
}
