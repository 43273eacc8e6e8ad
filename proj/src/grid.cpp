#include "sosvn/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sosvn {

Grid Grid::refined(int factor) const {
  if (factor < 1) throw std::invalid_argument("refinement factor must be >= 1");
  Grid g = *this;
  g.n_z *= factor;
  g.n_x *= factor;
  g.dz /= factor;
  g.dx /= factor;
  return g;
}

void Grid::validate() const {
  if (n_z < 4 || n_x < 4) throw std::invalid_argument("grid needs at least 4 cells per axis");
  if (!(dz > 0.0) || !(dx > 0.0)) throw std::invalid_argument("grid cell size must be positive");
  if (!std::isfinite(origin.z) || !std::isfinite(origin.x)) throw std::invalid_argument("grid origin must be finite");
}

std::vector<double> Probe::element_positions() const {
  std::vector<double> xs(n_elements);
  const double mid = 0.5 * (n_elements - 1);
  for (int e = 0; e < n_elements; ++e) xs[e] = center_x + (e - mid) * pitch;
  return xs;
}

Point Probe::element(int e) const {
  return {0.0, center_x + (e - 0.5 * (n_elements - 1)) * pitch};
}

Probe Probe::centered_on(const Grid& grid) {
  Probe p;
  p.center_x = grid.origin.x + 0.5 * grid.width();
  return p;
}

void Probe::validate() const {
  if (n_elements < 2) throw std::invalid_argument("probe needs at least two elements");
  if (!(pitch > 0.0)) throw std::invalid_argument("probe pitch must be positive");
  if (!(f_c > 0.0)) throw std::invalid_argument("center frequency must be positive");
}

TxPairScheme TxPairScheme::equally_spaced(int first, int last, int count) {
  if (count < 2) throw std::invalid_argument("a pair scheme needs at least two transmits");
  if (last <= first) throw std::invalid_argument("transmit span must be increasing");
  TxPairScheme s;
  for (int i = 0; i < count; ++i) {
    const double pos = first + (last - first) * static_cast<double>(i) / (count - 1);
    s.tx_elements.push_back(static_cast<int>(std::lround(pos)));
  }
  for (int a = 0; a < count; ++a)
    for (int b = a + 1; b < count; ++b) s.pairs.emplace_back(a, b);
  return s;
}

TxPairScheme TxPairScheme::across_aperture(const Probe& probe, int count) {
  return equally_spaced(0, probe.n_elements - 1, count);
}

TxPairScheme TxPairScheme::nearby_pairs(const Probe& probe, int n_pairs, int separation) {
  if (n_pairs < 1) throw std::invalid_argument("need at least one transmit pair");
  if (separation < 1 || separation >= probe.n_elements) throw std::invalid_argument("pair separation out of range");
  TxPairScheme s;
  const double span = probe.n_elements - 1 - separation;
  for (int k = 0; k < n_pairs; ++k) {
    const int first = n_pairs == 1 ? static_cast<int>(std::lround(0.5 * span))
                                   : static_cast<int>(std::lround(span * k / (n_pairs - 1)));
    s.tx_elements.push_back(first);
    s.tx_elements.push_back(first + separation);
    s.pairs.emplace_back(2 * k, 2 * k + 1);
  }
  for (std::size_t i = 1; i < s.tx_elements.size(); ++i)
    if (s.tx_elements[i] <= s.tx_elements[i - 1]) throw std::invalid_argument("transmit pairs overlap");
  return s;
}

void TxPairScheme::validate(const Probe& probe) const {
  if (tx_elements.empty()) throw std::invalid_argument("no transmit elements");
  for (int e : tx_elements)
    if (e < 0 || e >= probe.n_elements)
      throw std::invalid_argument("transmit element " + std::to_string(e) + " outside the probe");
  if (pairs.empty()) throw std::invalid_argument("no transmit pairs");
  const int n = static_cast<int>(tx_elements.size());
  for (auto [a, b] : pairs)
    if (a < 0 || b >= n || a >= b) throw std::invalid_argument("transmit pair must satisfy 0 <= a < b < n_tx");
}

}  // namespace sosvn
