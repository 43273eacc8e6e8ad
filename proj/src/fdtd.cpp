#include "sosvn/fdtd.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sosvn {

namespace {

constexpr float kC1 = 9.0f / 8.0f;
constexpr float kC2 = -1.0f / 24.0f;
constexpr int kPad = 2;

struct Interp {
  std::array<std::size_t, 4> idx{};
  std::array<float, 4> w{};
};

// Bilinear weights on the padded pressure array for a physical point.
Interp bilinear(const SimGrid& g, Point pt, std::size_t stride) {
  const double fz = pt.z / g.ds - 0.5;
  const double fx = (pt.x - g.x_left) / g.ds - 0.5;
  int iz = static_cast<int>(std::floor(fz));
  int ix = static_cast<int>(std::floor(fx));
  double tz = fz - iz, tx = fx - ix;
  if (iz < 0) { iz = 0; tz = 0.0; }
  if (ix < 0) { ix = 0; tx = 0.0; }
  if (iz >= g.n_z - 1) { iz = g.n_z - 2; tz = 1.0; }
  if (ix >= g.n_x - 1) { ix = g.n_x - 2; tx = 1.0; }
  auto at = [&](int z, int x) { return static_cast<std::size_t>(z + kPad) * stride + (x + kPad); };
  Interp r;
  r.idx = {at(iz, ix), at(iz, ix + 1), at(iz + 1, ix), at(iz + 1, ix + 1)};
  r.w = {static_cast<float>((1 - tz) * (1 - tx)), static_cast<float>((1 - tz) * tx),
         static_cast<float>(tz * (1 - tx)), static_cast<float>(tz * tx)};
  return r;
}

}  // namespace

SimGrid SimGrid::covering(const Grid& grid, int refine, int sponge) {
  if (refine < 1) throw std::invalid_argument("simulation refinement must be >= 1");
  SimGrid s;
  s.ds = grid.dz / refine;
  s.sponge = sponge;
  s.n_z = grid.n_z * refine + sponge;
  s.n_x = static_cast<int>(std::lround(grid.width() / s.ds)) + 2 * sponge;
  s.x_left = grid.origin.x - sponge * s.ds;
  return s;
}

double AcousticMedium::max_speed() const {
  return sound_speed.empty() ? 0.0 : *std::max_element(sound_speed.begin(), sound_speed.end());
}

void AcousticMedium::validate() const {
  if (grid.n_z < 2 * grid.sponge || grid.n_x < 2 * grid.sponge + 2)
    throw std::invalid_argument("simulation grid too small for its sponge");
  if (grid.sponge < 10) throw std::invalid_argument("sponge must be at least 10 cells wide");
  if (sound_speed.size() != grid.cells() || density.size() != grid.cells())
    throw std::invalid_argument("medium fields do not match the simulation grid");
  for (float r : density)
    if (!(r > 0.0f)) throw std::invalid_argument("density must be positive");
  for (float c : sound_speed)
    if (!(c > 0.0f)) throw std::invalid_argument("sound speed must be positive");
}

AcousticMedium AcousticMedium::homogeneous(const SimGrid& grid, double speed, double density) {
  AcousticMedium m;
  m.grid = grid;
  m.sound_speed.assign(grid.cells(), static_cast<float>(speed));
  m.density.assign(grid.cells(), static_cast<float>(density));
  return m;
}

double Pulse::operator()(double t) const {
  const double T = duration();
  if (t < 0.0 || t > T) return 0.0;
  const double win = std::sin(std::numbers::pi * t / T);
  return std::sin(2.0 * std::numbers::pi * f_c * t) * win * win;
}

std::vector<double> Pulse::sampled(double fs) const {
  const auto n = static_cast<std::size_t>(std::ceil(duration() * fs)) + 1;
  std::vector<double> s(n);
  for (std::size_t k = 0; k < n; ++k) s[k] = (*this)(k / fs);
  return s;
}

double pulse_half_integral(const Pulse& pulse, double t) {
  if (t <= 0.0) return 0.0;
  constexpr int kPieces = 512;
  const double T = pulse.duration();
  const double h = T / kPieces;
  double acc = 0.0;
  for (int k = 0; k < kPieces; ++k) {
    const double t0 = k * h;
    if (t0 >= t) break;
    const double t1 = std::min(t0 + h, t);
    const double f0 = pulse(t0);
    const double slope = (pulse(t0 + h) - f0) / h;
    const double u0 = t - t0, u1 = t - t1;
    const double s0 = std::sqrt(u0), s1 = std::sqrt(u1);
    acc += (f0 + slope * u0) * 2.0 * (s0 - s1) - slope * (2.0 / 3.0) * (u0 * s0 - u1 * s1);
  }
  return acc / std::sqrt(std::numbers::pi);
}

double fdtd_time_step(const AcousticMedium& medium, const FdtdOptions& options) {
  return options.cfl * medium.grid.ds / medium.max_speed();
}

Recording run_fdtd(const AcousticMedium& medium, double source_x, const Pulse& pulse, std::span<const Point> probes,
                   const FdtdOptions& options) {
  medium.validate();
  if (!(options.cfl > 0.0) || options.cfl > 0.5) throw std::invalid_argument("CFL number must lie in (0, 0.5]");
  if (options.record_stride < 1) throw std::invalid_argument("record stride must be >= 1");
  const SimGrid& g = medium.grid;
  const double dt = fdtd_time_step(medium, options);
  const auto n_steps = static_cast<std::size_t>(std::ceil(options.t_end / dt));

  const int NZ = g.n_z, NX = g.n_x;
  const std::size_t stride = NX + 2 * kPad;
  const std::size_t rows = NZ + 2 * kPad;
  std::vector<float> p(rows * stride, 0.0f), vx(rows * stride, 0.0f), vz(rows * stride, 0.0f);
  auto at = [&](int z, int x) { return static_cast<std::size_t>(z + kPad) * stride + (x + kPad); };

  // Per-cell bulk modulus and per-face buoyancy, both pre-multiplied by dt / ds.
  std::vector<float> kappa(rows * stride, 0.0f), bx(rows * stride, 0.0f), bz(rows * stride, 0.0f);
  const double k_dt = dt / g.ds;
  for (int z = 0; z < NZ; ++z)
    for (int x = 0; x < NX; ++x) {
      const std::size_t c = g.index(z, x);
      const double rho = medium.density[c], sp = medium.sound_speed[c];
      kappa[at(z, x)] = static_cast<float>(rho * sp * sp * k_dt);
      // face x + 1/2
      const double rho_r = x + 1 < NX ? medium.density[g.index(z, x + 1)] : rho;
      bx[at(z, x)] = static_cast<float>(0.5 * (1.0 / rho + 1.0 / rho_r) * k_dt);
      // face z - 1/2 (between cell z - 1 and z)
      const double rho_u = z > 0 ? medium.density[g.index(z - 1, x)] : rho;
      bz[at(z, x)] = static_cast<float>(0.5 * (1.0 / rho + 1.0 / rho_u) * k_dt);
    }
  for (int x = -1; x < 0; ++x)
    for (int z = 0; z < NZ; ++z) bx[at(z, x)] = bx[at(z, 0)];

  // Sponge damping, evaluated where each field lives: pressure at cell
  // centers, vx at x + 1/2, vz at z - 1/2.
  std::vector<float> damp_p(rows * stride, 1.0f), damp_x(rows * stride, 1.0f), damp_z(rows * stride, 1.0f);
  auto taper = [&](double zc, double xc) {
    const double d = std::max({g.sponge - xc, xc - (NX - 1 - g.sponge), zc - (NZ - 1 - g.sponge), 0.0});
    const double a = medium.sponge_strength * d / g.sponge;
    return static_cast<float>(std::exp(-a * a));
  };
  for (int z = 0; z < NZ; ++z)
    for (int x = -1; x < NX; ++x) {
      damp_p[at(z, x)] = x >= 0 ? taper(z, x) : 1.0f;
      damp_x[at(z, x)] = taper(z, x + 0.5);
      damp_z[at(z, x)] = x >= 0 ? taper(z - 0.5, x) : 1.0f;
    }
  // Rows and columns that contain any damping.
  const int z_damp = NZ - 1 - g.sponge;
  const int x_lo = g.sponge, x_hi = NX - 1 - g.sponge;

  // Source: linear spread over the two nearest cells of the top row.
  const double fx = (source_x - g.x_left) / g.ds - 0.5;
  const int sx = std::clamp(static_cast<int>(std::floor(fx)), 0, NX - 2);
  const double sw = std::clamp(fx - sx, 0.0, 1.0);
  const double src_scale = k_dt * medium.density[g.index(0, sx)] * medium.sound_speed[g.index(0, sx)];

  std::vector<Interp> rec(probes.size());
  for (std::size_t i = 0; i < probes.size(); ++i) rec[i] = bilinear(g, probes[i], stride);

  Recording out;
  out.fs = 1.0 / (dt * options.record_stride);
  out.n_probes = probes.size();
  out.n_samples = n_steps / options.record_stride + 1;
  out.traces.assign(out.n_probes * out.n_samples, 0.0f);

  for (std::size_t n = 0; n < n_steps; ++n) {
    // Rigid wall at z = 0: pressure even, normal velocity odd.
    for (int x = 0; x < NX; ++x) {
      p[at(-1, x)] = p[at(0, x)];
      p[at(-2, x)] = p[at(1, x)];
    }
    for (int z = 0; z < NZ; ++z) {
      float* __restrict vxr = vx.data() + at(z, 0);
      const float* __restrict pr = p.data() + at(z, 0);
      const float* __restrict bxr = bx.data() + at(z, 0);
      for (int x = -1; x < NX; ++x)
        vxr[x] -= bxr[x] * (kC1 * (pr[x + 1] - pr[x]) + kC2 * (pr[x + 2] - pr[x - 1]));
    }
    for (int z = 1; z < NZ; ++z) {
      float* __restrict vzr = vz.data() + at(z, 0);
      const float* __restrict p0 = p.data() + at(z, 0);
      const float* __restrict pm1 = p.data() + at(z - 1, 0);
      const float* __restrict pp1 = p.data() + at(z + 1, 0);
      const float* __restrict pm2 = p.data() + at(z - 2, 0);
      const float* __restrict bzr = bz.data() + at(z, 0);
      for (int x = 0; x < NX; ++x) vzr[x] -= bzr[x] * (kC1 * (p0[x] - pm1[x]) + kC2 * (pp1[x] - pm2[x]));
    }
    for (int x = 0; x < NX; ++x) {
      vz[at(0, x)] = 0.0f;
      vz[at(-1, x)] = -vz[at(1, x)];
    }
    for (int z = 0; z < NZ; ++z) {
      float* __restrict pr = p.data() + at(z, 0);
      const float* __restrict vxr = vx.data() + at(z, 0);
      const float* __restrict vz0 = vz.data() + at(z, 0);
      const float* __restrict vz1 = vz.data() + at(z + 1, 0);
      const float* __restrict vz2 = vz.data() + at(z + 2, 0);
      const float* __restrict vzm = vz.data() + at(z - 1, 0);
      const float* __restrict kr = kappa.data() + at(z, 0);
      for (int x = 0; x < NX; ++x) {
        const float div = kC1 * (vxr[x] - vxr[x - 1]) + kC2 * (vxr[x + 1] - vxr[x - 2]) + kC1 * (vz1[x] - vz0[x]) +
                          kC2 * (vz2[x] - vzm[x]);
        pr[x] -= kr[x] * div;
      }
    }
    const double drive = src_scale * pulse_half_integral(pulse, (n + 0.5) * dt);
    p[at(0, sx)] += static_cast<float>((1.0 - sw) * drive);
    p[at(0, sx + 1)] += static_cast<float>(sw * drive);

    for (int z = 0; z < NZ; ++z) {
      auto apply = [&](int x) {
        const std::size_t i = at(z, x);
        p[i] *= damp_p[i];
        vx[i] *= damp_x[i];
        vz[i] *= damp_z[i];
      };
      if (z >= z_damp) {
        for (int x = -1; x < NX; ++x) apply(x);
      } else {
        for (int x = -1; x <= x_lo; ++x) apply(x);
        for (int x = x_hi - 1; x < NX; ++x) apply(x);
      }
    }

    if ((n + 1) % options.record_stride == 0) {
      const std::size_t k = (n + 1) / options.record_stride;
      for (std::size_t i = 0; i < rec.size(); ++i) {
        const Interp& r = rec[i];
        out.traces[i * out.n_samples + k] =
            r.w[0] * p[r.idx[0]] + r.w[1] * p[r.idx[1]] + r.w[2] * p[r.idx[2]] + r.w[3] * p[r.idx[3]];
      }
    }
  }
  return out;
}

}  // namespace sosvn
