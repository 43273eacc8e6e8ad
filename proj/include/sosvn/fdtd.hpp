#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sosvn/grid.hpp"

namespace sosvn {

/// Simulation grid for the acoustic solver. The transducer surface is the
/// rigid top edge z = 0; the other three edges carry absorbing sponge layers.
/// Pressure lives at cell centers ((iz + 0.5) ds, x_left + (ix + 0.5) ds).
struct SimGrid {
  int n_z = 0;
  int n_x = 0;
  double ds = 0.0;
  double x_left = 0.0;  // lateral coordinate of the left domain edge
  int sponge = 60;      // sponge width in cells (left, right and bottom)

  std::size_t cells() const { return static_cast<std::size_t>(n_z) * n_x; }
  std::size_t index(int iz, int ix) const { return static_cast<std::size_t>(iz) * n_x + ix; }
  Point center(int iz, int ix) const { return {(iz + 0.5) * ds, x_left + (ix + 0.5) * ds}; }

  /// Covers `grid` with cells of size grid.dz / refine plus sponge padding.
  static SimGrid covering(const Grid& grid, int refine, int sponge);
};

struct AcousticMedium {
  SimGrid grid;
  std::vector<float> sound_speed;  // m/s, per cell
  std::vector<float> density;      // kg/m^3, per cell
  double sponge_strength = 0.2;    // damping exponent at the outer sponge edge

  double max_speed() const;
  /// Throws when sizes disagree, density is not positive, or the sponge is
  /// narrower than 10 cells.
  void validate() const;

  static AcousticMedium homogeneous(const SimGrid& grid, double speed, double density = 1000.0);
};

/// Windowed sine burst: `half_cycles` half periods at f_c under a Hann window.
struct Pulse {
  double f_c = 1e6;
  int half_cycles = 4;

  double duration() const { return half_cycles / (2.0 * f_c); }
  double operator()(double t) const;
  /// Pulse sampled at t = k / fs for k = 0 .. ceil(duration * fs).
  std::vector<double> sampled(double fs) const;
};

/// Half-order Riemann-Liouville integral of the pulse, evaluated at `t`.
/// Driving a 2D point mass source with this signal radiates the pulse itself
/// into the far field (up to amplitude).
double pulse_half_integral(const Pulse& pulse, double t);

struct FdtdOptions {
  double cfl = 0.3;        // c_max dt / ds
  int record_stride = 2;   // record every n-th time step
  double t_end = 0.0;      // seconds of simulated time
};

struct Recording {
  double fs = 0.0;            // sample rate of the stored traces
  std::size_t n_samples = 0;
  std::size_t n_probes = 0;
  std::vector<float> traces;  // probe-major: traces[probe * n_samples + k], time k / fs

  std::span<const float> trace(std::size_t probe) const {
    return {traces.data() + probe * n_samples, n_samples};
  }
};

/// First-order velocity-pressure staggered-grid solver, fourth order in space
/// and second order in time. A point source at lateral position `source_x` on
/// the transducer surface emits `pulse` in the far field; pressure is recorded
/// at `probes` by bilinear interpolation.
///
/// Throws std::invalid_argument when cfl > 0.5 or the medium is invalid.
Recording run_fdtd(const AcousticMedium& medium, double source_x, const Pulse& pulse, std::span<const Point> probes,
                   const FdtdOptions& options);

/// Time step used by run_fdtd for this medium.
double fdtd_time_step(const AcousticMedium& medium, const FdtdOptions& options);

}  // namespace sosvn
