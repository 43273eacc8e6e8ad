#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace sosvn {

/// A 2D position in meters. `z` is depth below the transducer surface, `x`
/// is the lateral coordinate.
struct Point {
  double z = 0.0;
  double x = 0.0;

  bool operator==(const Point&) const = default;
};

/// Regular reconstruction grid. Cells are stored z-major: index = iz * n_x + ix.
struct Grid {
  int n_z = 84;
  int n_x = 64;
  double dz = 0.6e-3;
  double dx = 0.6e-3;
  Point origin{};  // corner of cell (0, 0)

  std::size_t cells() const { return static_cast<std::size_t>(n_z) * static_cast<std::size_t>(n_x); }
  std::size_t index(int iz, int ix) const { return static_cast<std::size_t>(iz) * n_x + ix; }
  double depth() const { return n_z * dz; }
  double width() const { return n_x * dx; }
  Point cell_center(int iz, int ix) const {
    return {origin.z + (iz + 0.5) * dz, origin.x + (ix + 0.5) * dx};
  }
  Point cell_center(std::size_t index) const {
    return cell_center(static_cast<int>(index / n_x), static_cast<int>(index % n_x));
  }

  /// Same physical extent, each cell split into factor x factor sub-cells.
  Grid refined(int factor) const;

  /// Throws std::invalid_argument when the invariants do not hold.
  void validate() const;

  bool operator==(const Grid&) const = default;
};

/// Linear array lying on the line z = 0.
struct Probe {
  int n_elements = 128;
  double pitch = 300e-6;
  double f_c = 5e6;
  double center_x = 19.2e-3;  // lateral position of the array midpoint

  std::vector<double> element_positions() const;
  Point element(int e) const;
  double aperture() const { return (n_elements - 1) * pitch; }

  /// Probe of default shape whose midpoint sits over the lateral grid center.
  static Probe centered_on(const Grid& grid);

  void validate() const;
};

/// Transmit elements and the ordered list of transmit pairs that make up the
/// measurement rows. Pairs index into `tx_elements`, with first < second.
struct TxPairScheme {
  std::vector<int> tx_elements;
  std::vector<std::pair<int, int>> pairs;

  std::size_t n_tx() const { return tx_elements.size(); }
  std::size_t n_pairs() const { return pairs.size(); }

  /// `count` elements equally spaced over [first, last] (rounded to the
  /// nearest element), with all unordered pairs in lexicographic order.
  static TxPairScheme equally_spaced(int first, int last, int count);
  /// `count` transmits spread across the whole aperture, all pairs.
  static TxPairScheme across_aperture(const Probe& probe, int count = 4);
  /// Default: `n_pairs` pairs of elements `separation` apart, the pairs spread
  /// evenly across the aperture. Frames of nearby transmits stay correlated
  /// enough to be tracked.
  static TxPairScheme nearby_pairs(const Probe& probe, int n_pairs = 6, int separation = 8);

  void validate(const Probe& probe) const;

  bool operator==(const TxPairScheme&) const = default;
};

}  // namespace sosvn
