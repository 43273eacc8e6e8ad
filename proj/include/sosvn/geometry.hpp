#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "sosvn/grid.hpp"

namespace sosvn {

struct CellLength {
  std::uint32_t cell = 0;
  double length = 0.0;  // meters
};

struct Triplet {
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  double value = 0.0;
};

namespace detail {

// Crossing parameters closer than this are one simultaneous corner crossing.
inline constexpr double kCornerTolerance = 1e-12;

inline int start_index(double pos, double origin, double step, double dir, int n) {
  const double f = (pos - origin) / step;
  int i = static_cast<int>(std::floor(f));
  if (dir < 0.0 && f == std::floor(f)) i -= 1;
  if (i < 0) i = 0;
  if (i >= n) i = n - 1;
  return i;
}

}  // namespace detail

/// Parametric cell traversal of the segment src -> dst. Calls
/// `visit(cell_index, length)` for every cell the segment passes through, in
/// ray order. A crossing through a cell corner steps diagonally into the next
/// cell along the ray. Endpoints must lie inside or on the grid bounding box.
template <class Visit>
void traverse_segment(Point src, Point dst, const Grid& grid, Visit&& visit) {
  const double dzr = dst.z - src.z;
  const double dxr = dst.x - src.x;
  const double len = std::hypot(dzr, dxr);
  if (len == 0.0) return;

  int iz = detail::start_index(src.z, grid.origin.z, grid.dz, dzr, grid.n_z);
  int ix = detail::start_index(src.x, grid.origin.x, grid.dx, dxr, grid.n_x);
  const int sz = dzr > 0.0 ? 1 : (dzr < 0.0 ? -1 : 0);
  const int sx = dxr > 0.0 ? 1 : (dxr < 0.0 ? -1 : 0);
  const double inf = std::numeric_limits<double>::infinity();

  auto next_z = [&](int i) {
    if (sz == 0) return inf;
    const double line = grid.origin.z + (sz > 0 ? i + 1 : i) * grid.dz;
    return (line - src.z) / dzr;
  };
  auto next_x = [&](int i) {
    if (sx == 0) return inf;
    const double line = grid.origin.x + (sx > 0 ? i + 1 : i) * grid.dx;
    return (line - src.x) / dxr;
  };

  double t = 0.0;
  while (t < 1.0) {
    const double tz = next_z(iz);
    const double tx = next_x(ix);
    double t_next = std::min(std::min(tz, tx), 1.0);
    if (t_next > t) visit(static_cast<std::uint32_t>(grid.index(iz, ix)), (t_next - t) * len);
    t = t_next;
    if (t >= 1.0) break;
    const bool cross_z = tz <= t + detail::kCornerTolerance;
    const bool cross_x = tx <= t + detail::kCornerTolerance;
    if (cross_z) iz += sz;
    if (cross_x) ix += sx;
    if (iz < 0 || iz >= grid.n_z || ix < 0 || ix >= grid.n_x) break;
  }
}

/// Lengths of the segment src -> dst inside each traversed cell, in ray order.
std::vector<CellLength> trace_cell_lengths(Point src, Point dst, const Grid& grid);

/// Line integral of a per-cell field along src -> dst.
double integrate_segment(Point src, Point dst, const Grid& grid, std::span<const double> field);

/// Sparse differential path-length matrix L (n_r x P_x).
///
/// Row `pair * P_x + p` holds lengths(ray a -> p) - lengths(ray b -> p) for
/// the transmit pair (a, b) and pixel p = iz * n_x + ix; rays end at pixel
/// centers. Internally the matrix is kept factored as one single-ray matrix
/// per transmit, so products cost a third of the explicit row form.
class RayMatrix {
 public:
  RayMatrix() = default;
  RayMatrix(const Grid& grid, const Probe& probe, const TxPairScheme& scheme);

  std::size_t rows() const { return scheme_.n_pairs() * grid_.cells(); }
  std::size_t cols() const { return grid_.cells(); }
  std::size_t n_pairs() const { return scheme_.n_pairs(); }
  const Grid& grid() const { return grid_; }
  const Probe& probe() const { return probe_; }
  const TxPairScheme& scheme() const { return scheme_; }

  /// out = L x.
  void multiply(std::span<const double> x, std::span<double> out) const;
  /// out = L^T y.
  void multiply_transpose(std::span<const double> y, std::span<double> out) const;

  /// Batched forms: vectors are interleaved, element i of vector b at i * batch + b.
  void multiply(std::span<const double> x, std::span<double> out, std::size_t batch) const;
  void multiply_transpose(std::span<const double> y, std::span<double> out, std::size_t batch) const;

  /// Single-ray travel-time integrals: out[tx * P_x + p] = sum_c l_{tx->p,c} x_c.
  void transmit_integrals(std::span<const double> x, std::span<double> out) const;

  /// Explicit entries of one row, sorted by column; exact zeros dropped.
  std::vector<Triplet> row(std::size_t r) const;
  /// All entries in row-major order.
  std::vector<Triplet> triplets() const;
  std::size_t nonzeros() const;

  /// L * 1, i.e. |a -> p| - |b -> p| per row up to rounding.
  const std::vector<double>& ones_product() const { return ones_; }

  /// Cell lengths of the single ray transmit `tx` -> pixel p, sorted by cell.
  std::span<const std::uint32_t> ray_cells(std::size_t tx, std::size_t p) const;
  std::span<const double> ray_lengths(std::size_t tx, std::size_t p) const;

 private:
  struct RayTable {
    std::vector<std::size_t> ptr;
    std::vector<std::uint32_t> col;
    std::vector<double> val;
  };

  Grid grid_;
  Probe probe_;
  TxPairScheme scheme_;
  std::vector<RayTable> rays_;  // one per transmit
  std::vector<double> ones_;
};

/// Block-mean downsampling of a measurement vector from grid.refined(factor)
/// to grid. `d_h` is pair-major on the fine grid.
std::vector<double> downsample_measurements(std::span<const double> d_h, const Grid& coarse, int factor,
                                            std::size_t n_pairs);

}  // namespace sosvn
