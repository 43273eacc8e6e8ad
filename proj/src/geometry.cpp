#include "sosvn/geometry.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace sosvn {

std::vector<CellLength> trace_cell_lengths(Point src, Point dst, const Grid& grid) {
  std::vector<CellLength> out;
  traverse_segment(src, dst, grid, [&](std::uint32_t cell, double len) { out.push_back({cell, len}); });
  return out;
}

double integrate_segment(Point src, Point dst, const Grid& grid, std::span<const double> field) {
  double acc = 0.0;
  traverse_segment(src, dst, grid, [&](std::uint32_t cell, double len) { acc += len * field[cell]; });
  return acc;
}

RayMatrix::RayMatrix(const Grid& grid, const Probe& probe, const TxPairScheme& scheme)
    : grid_(grid), probe_(probe), scheme_(scheme) {
  grid_.validate();
  probe_.validate();
  scheme_.validate(probe_);

  const std::size_t n_pix = grid_.cells();
  rays_.resize(scheme_.n_tx());
  for (std::size_t t = 0; t < scheme_.n_tx(); ++t) {
    const Point src = probe_.element(scheme_.tx_elements[t]);
    std::vector<std::vector<CellLength>> per_pixel(n_pix);
#pragma omp parallel for schedule(dynamic, 64)
    for (std::size_t p = 0; p < n_pix; ++p) {
      auto ray = trace_cell_lengths(src, grid_.cell_center(p), grid_);
      std::sort(ray.begin(), ray.end(), [](const CellLength& a, const CellLength& b) { return a.cell < b.cell; });
      per_pixel[p] = std::move(ray);
    }
    RayTable& table = rays_[t];
    table.ptr.assign(n_pix + 1, 0);
    for (std::size_t p = 0; p < n_pix; ++p) table.ptr[p + 1] = table.ptr[p] + per_pixel[p].size();
    table.col.resize(table.ptr.back());
    table.val.resize(table.ptr.back());
    for (std::size_t p = 0; p < n_pix; ++p) {
      std::size_t k = table.ptr[p];
      for (const auto& cl : per_pixel[p]) {
        table.col[k] = cl.cell;
        table.val[k] = cl.length;
        ++k;
      }
    }
  }

  ones_.assign(rows(), 0.0);
  std::vector<double> ones(cols(), 1.0);
  multiply(ones, ones_);
}

void RayMatrix::transmit_integrals(std::span<const double> x, std::span<double> out) const {
  const std::size_t n_pix = grid_.cells();
  if (x.size() != n_pix || out.size() != scheme_.n_tx() * n_pix)
    throw std::invalid_argument("transmit_integrals: size mismatch");
  for (std::size_t t = 0; t < rays_.size(); ++t) {
    const RayTable& tab = rays_[t];
    for (std::size_t p = 0; p < n_pix; ++p) {
      double acc = 0.0;
      for (std::size_t k = tab.ptr[p]; k < tab.ptr[p + 1]; ++k) acc += tab.val[k] * x[tab.col[k]];
      out[t * n_pix + p] = acc;
    }
  }
}

void RayMatrix::multiply(std::span<const double> x, std::span<double> out) const { multiply(x, out, 1); }

void RayMatrix::multiply_transpose(std::span<const double> y, std::span<double> out) const {
  multiply_transpose(y, out, 1);
}

void RayMatrix::multiply(std::span<const double> x, std::span<double> out, std::size_t batch) const {
  const std::size_t n_pix = grid_.cells();
  if (x.size() != n_pix * batch || out.size() != rows() * batch)
    throw std::invalid_argument("RayMatrix::multiply: size mismatch");
  std::vector<double> t_int(scheme_.n_tx() * n_pix * batch);
  for (std::size_t t = 0; t < rays_.size(); ++t) {
    const RayTable& tab = rays_[t];
    double* base = t_int.data() + t * n_pix * batch;
    for (std::size_t p = 0; p < n_pix; ++p) {
      double* acc = base + p * batch;
      for (std::size_t k = tab.ptr[p]; k < tab.ptr[p + 1]; ++k) {
        const double v = tab.val[k];
        const double* xs = x.data() + static_cast<std::size_t>(tab.col[k]) * batch;
        for (std::size_t b = 0; b < batch; ++b) acc[b] += v * xs[b];
      }
    }
  }
  for (std::size_t r = 0; r < scheme_.n_pairs(); ++r) {
    const auto [a, b] = scheme_.pairs[r];
    const double* ta = t_int.data() + a * n_pix * batch;
    const double* tb = t_int.data() + b * n_pix * batch;
    double* o = out.data() + r * n_pix * batch;
    for (std::size_t i = 0; i < n_pix * batch; ++i) o[i] = ta[i] - tb[i];
  }
}

void RayMatrix::multiply_transpose(std::span<const double> y, std::span<double> out, std::size_t batch) const {
  const std::size_t n_pix = grid_.cells();
  if (y.size() != rows() * batch || out.size() != n_pix * batch)
    throw std::invalid_argument("RayMatrix::multiply_transpose: size mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  std::vector<double> y_tx(n_pix * batch);
  for (std::size_t t = 0; t < rays_.size(); ++t) {
    std::fill(y_tx.begin(), y_tx.end(), 0.0);
    for (std::size_t r = 0; r < scheme_.n_pairs(); ++r) {
      const auto [a, b] = scheme_.pairs[r];
      if (static_cast<std::size_t>(a) != t && static_cast<std::size_t>(b) != t) continue;
      const double* yr = y.data() + r * n_pix * batch;
      if (static_cast<std::size_t>(a) == t)
        for (std::size_t i = 0; i < n_pix * batch; ++i) y_tx[i] += yr[i];
      else
        for (std::size_t i = 0; i < n_pix * batch; ++i) y_tx[i] -= yr[i];
    }
    const RayTable& tab = rays_[t];
    for (std::size_t p = 0; p < n_pix; ++p) {
      const double* ys = y_tx.data() + p * batch;
      for (std::size_t k = tab.ptr[p]; k < tab.ptr[p + 1]; ++k) {
        const double v = tab.val[k];
        double* o = out.data() + static_cast<std::size_t>(tab.col[k]) * batch;
        for (std::size_t b = 0; b < batch; ++b) o[b] += v * ys[b];
      }
    }
  }
}

std::span<const std::uint32_t> RayMatrix::ray_cells(std::size_t tx, std::size_t p) const {
  const RayTable& tab = rays_.at(tx);
  return {tab.col.data() + tab.ptr[p], tab.ptr[p + 1] - tab.ptr[p]};
}

std::span<const double> RayMatrix::ray_lengths(std::size_t tx, std::size_t p) const {
  const RayTable& tab = rays_.at(tx);
  return {tab.val.data() + tab.ptr[p], tab.ptr[p + 1] - tab.ptr[p]};
}

std::vector<Triplet> RayMatrix::row(std::size_t r) const {
  if (r >= rows()) throw std::out_of_range("RayMatrix::row");
  const std::size_t n_pix = grid_.cells();
  const std::size_t pair = r / n_pix;
  const std::size_t p = r % n_pix;
  const auto [a, b] = scheme_.pairs[pair];
  auto ca = ray_cells(a, p), cb = ray_cells(b, p);
  auto la = ray_lengths(a, p), lb = ray_lengths(b, p);
  std::vector<Triplet> out;
  out.reserve(ca.size() + cb.size());
  const auto row32 = static_cast<std::uint32_t>(r);
  std::size_t i = 0, j = 0;
  while (i < ca.size() || j < cb.size()) {
    if (j == cb.size() || (i < ca.size() && ca[i] < cb[j])) {
      out.push_back({row32, ca[i], la[i]});
      ++i;
    } else if (i == ca.size() || cb[j] < ca[i]) {
      out.push_back({row32, cb[j], -lb[j]});
      ++j;
    } else {
      const double v = la[i] - lb[j];
      if (v != 0.0) out.push_back({row32, ca[i], v});
      ++i;
      ++j;
    }
  }
  return out;
}

std::vector<Triplet> RayMatrix::triplets() const {
  std::vector<Triplet> out;
  for (std::size_t r = 0; r < rows(); ++r) {
    auto row_entries = row(r);
    out.insert(out.end(), row_entries.begin(), row_entries.end());
  }
  return out;
}

std::size_t RayMatrix::nonzeros() const {
  std::size_t n = 0;
  for (std::size_t r = 0; r < rows(); ++r) n += row(r).size();
  return n;
}

std::vector<double> downsample_measurements(std::span<const double> d_h, const Grid& coarse, int factor,
                                            std::size_t n_pairs) {
  if (factor < 1) throw std::invalid_argument("downsampling factor must be >= 1");
  const std::size_t fz = static_cast<std::size_t>(coarse.n_z) * factor;
  const std::size_t fx = static_cast<std::size_t>(coarse.n_x) * factor;
  if (d_h.size() != n_pairs * fz * fx)
    throw std::invalid_argument("downsample_measurements: fine vector is not a factor multiple of the coarse grid");
  const std::size_t n_pix = coarse.cells();
  std::vector<double> out(n_pairs * n_pix, 0.0);
  const double inv = 1.0 / (static_cast<double>(factor) * factor);
  for (std::size_t r = 0; r < n_pairs; ++r) {
    const double* src = d_h.data() + r * fz * fx;
    double* dst = out.data() + r * n_pix;
    for (int iz = 0; iz < coarse.n_z; ++iz)
      for (int ix = 0; ix < coarse.n_x; ++ix) {
        double acc = 0.0;
        for (int a = 0; a < factor; ++a)
          for (int b = 0; b < factor; ++b)
            acc += src[(static_cast<std::size_t>(iz) * factor + a) * fx + static_cast<std::size_t>(ix) * factor + b];
        dst[coarse.index(iz, ix)] = acc * inv;
      }
  }
  return out;
}

}  // namespace sosvn
