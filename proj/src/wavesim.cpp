#include "sosvn/wavesim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace sosvn {

namespace {

// Windows below this fraction of the strongest window energy are not
// candidates for the arrival; keeps weak late scattering out.
constexpr double kArrivalEnergyFloor = 1e-2;

double parabola_offset(double ym, double y0, double yp) {
  const double den = ym - 2.0 * y0 + yp;
  if (!(den < 0.0)) return 0.0;
  return std::clamp(0.5 * (ym - yp) / den, -0.5, 0.5);
}

std::vector<Point> pixel_centers(const Grid& grid) {
  std::vector<Point> pts(grid.cells());
  for (std::size_t p = 0; p < pts.size(); ++p) pts[p] = grid.cell_center(p);
  return pts;
}

// Longest tx -> pixel -> any-element path over the grid.
double longest_echo_path(const Grid& grid, const Probe& probe, Point tx) {
  const Point first = probe.element(0), last = probe.element(probe.n_elements - 1);
  double worst = 0.0;
  for (std::size_t p = 0; p < grid.cells(); ++p) {
    const Point c = grid.cell_center(p);
    const double leg = std::hypot(c.z - tx.z, c.x - tx.x);
    const double back = std::max(std::hypot(c.z - first.z, c.x - first.x), std::hypot(c.z - last.z, c.x - last.x));
    worst = std::max(worst, leg + back);
  }
  return worst;
}

double longest_leg(const Grid& grid, Point tx) {
  double worst = 0.0;
  for (std::size_t p = 0; p < grid.cells(); ++p) {
    const Point c = grid.cell_center(p);
    worst = std::max(worst, std::hypot(c.z - tx.z, c.x - tx.x));
  }
  return worst;
}

double min_speed(const AcousticMedium& m) { return *std::min_element(m.sound_speed.begin(), m.sound_speed.end()); }

}  // namespace

void WaveSimConfig::validate() const {
  if (!(f_c > 0.0)) throw std::invalid_argument("center frequency must be positive");
  if (refine < 1) throw std::invalid_argument("refine must be >= 1");
  if (sponge < 10) throw std::invalid_argument("sponge must be at least 10 cells");
  if (!(cfl > 0.0) || cfl > 0.5) throw std::invalid_argument("CFL number must lie in (0, 0.5]");
  if (!(assumed_sos > 0.0)) throw std::invalid_argument("assumed sound speed must be positive");
  if (axial_oversampling < 2 || axial_oversampling % 2 != 0)
    throw std::invalid_argument("axial oversampling must be even");
  if (search < 1) throw std::invalid_argument("tracking search must be >= 1");
  if (scatter_amplitude < 0.0 || scatter_amplitude >= 1.0)
    throw std::invalid_argument("scatter amplitude must lie in [0, 1)");
}

WaveSimConfig WaveSimConfig::desk() { return WaveSimConfig{}; }

WaveSimConfig WaveSimConfig::paper() {
  WaveSimConfig c;
  c.f_c = 5e6;
  c.refine = 25;
  return c;
}

Arrival estimate_arrival(std::span<const float> trace, std::span<const double> pulse, double fs) {
  const std::size_t n = trace.size(), m = pulse.size();
  if (m == 0 || n < m) return {};
  double pulse_energy = 0.0;
  for (double v : pulse) pulse_energy += v * v;
  if (pulse_energy == 0.0) return {};

  const std::size_t lags = n - m + 1;
  std::vector<double> energy(lags);
  double e = 0.0;
  for (std::size_t j = 0; j < m; ++j) e += static_cast<double>(trace[j]) * trace[j];
  energy[0] = e;
  for (std::size_t k = 1; k < lags; ++k) {
    e += static_cast<double>(trace[k + m - 1]) * trace[k + m - 1] - static_cast<double>(trace[k - 1]) * trace[k - 1];
    energy[k] = std::max(e, 0.0);
  }
  const double e_max = *std::max_element(energy.begin(), energy.end());
  if (!(e_max > 0.0)) return {};

  std::vector<double> ncc(lags, -1.0);
  std::size_t best = 0;
  double best_val = -2.0;
  for (std::size_t k = 0; k < lags; ++k) {
    if (energy[k] < kArrivalEnergyFloor * e_max) continue;
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) acc += pulse[j] * trace[k + j];
    ncc[k] = acc / std::sqrt(pulse_energy * energy[k]);
    if (ncc[k] > best_val) {
      best_val = ncc[k];
      best = k;
    }
  }
  double frac = 0.0;
  if (best > 0 && best + 1 < lags && ncc[best - 1] > -1.0 && ncc[best + 1] > -1.0)
    frac = parabola_offset(ncc[best - 1], ncc[best], ncc[best + 1]);
  return {(static_cast<double>(best) + frac) / fs, true};
}

ArrivalField estimate_arrival_times(const Recording& rec, const Pulse& pulse) {
  const auto ps = pulse.sampled(rec.fs);
  ArrivalField out;
  out.time.assign(rec.n_probes, 0.0);
  out.valid.assign(rec.n_probes, 0);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < rec.n_probes; ++i) {
    const Arrival a = estimate_arrival(rec.trace(i), ps, rec.fs);
    out.time[i] = a.valid ? a.time : 0.0;
    out.valid[i] = a.valid ? 1 : 0;
  }
  return out;
}

RelativeDelay relative_delays(const ArrivalField& a, const ArrivalField& b) {
  if (a.time.size() != b.time.size() || a.valid.size() != a.time.size() || b.valid.size() != b.time.size())
    throw std::invalid_argument("relative_delays: arrival fields on different grids");
  RelativeDelay r;
  r.delay.resize(a.time.size());
  r.valid.resize(a.time.size());
  for (std::size_t i = 0; i < a.time.size(); ++i) {
    const bool ok = a.valid[i] && b.valid[i];
    r.valid[i] = ok ? 1 : 0;
    r.delay[i] = ok ? a.time[i] - b.time[i] : 0.0;
  }
  return r;
}

AcousticMedium make_medium(const SoSMap& map, const WaveSimConfig& cfg) {
  cfg.validate();
  map.validate();
  if (map.grid.origin.z != 0.0) throw std::invalid_argument("the reconstruction grid must start at the probe surface");
  const SimGrid sg = SimGrid::covering(map.grid, cfg.refine, cfg.sponge);
  AcousticMedium m;
  m.grid = sg;
  m.sponge_strength = cfg.sponge_strength;
  m.sound_speed.resize(sg.cells());
  m.density.assign(sg.cells(), static_cast<float>(cfg.density));
  const int nz = map.grid.n_z, nx = map.grid.n_x;
  for (int z = 0; z < sg.n_z; ++z) {
    const int iz = std::min(z / cfg.refine, nz - 1);
    for (int x = 0; x < sg.n_x; ++x) {
      const int rel = x - sg.sponge;
      const int ix = rel < 0 ? 0 : std::min(rel / cfg.refine, nx - 1);
      m.sound_speed[sg.index(z, x)] = static_cast<float>(map.values[map.grid.index(iz, ix)]);
    }
  }
  return m;
}

AcousticMedium make_scatter_medium(const SoSMap& map, std::uint64_t seed, const WaveSimConfig& cfg) {
  AcousticMedium m = make_medium(map, cfg);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> fluct(-cfg.scatter_amplitude, cfg.scatter_amplitude);
  for (float& rho : m.density) rho = static_cast<float>(cfg.density * (1.0 + fluct(rng)));
  return m;
}

ArrivalField simulate_arrivals(const SoSMap& map, const Probe& probe, int tx, const WaveSimConfig& cfg) {
  const AcousticMedium medium = make_medium(map, cfg);
  const Point src = probe.element(tx);
  const Pulse pulse = cfg.pulse();
  FdtdOptions opt;
  opt.cfl = cfg.cfl;
  opt.record_stride = cfg.record_stride;
  opt.t_end = 1.2 * longest_leg(map.grid, src) / min_speed(medium) + 2.0 * pulse.duration();
  const auto probes = pixel_centers(map.grid);
  const Recording rec = run_fdtd(medium, src.x, pulse, probes, opt);
  return estimate_arrival_times(rec, pulse);
}

MeasurementSet wave_delay_measurements(const SoSMap& map, const Probe& probe, const TxPairScheme& scheme,
                                       const WaveSimConfig& cfg) {
  scheme.validate(probe);
  std::vector<ArrivalField> arrivals;
  for (int e : scheme.tx_elements) arrivals.push_back(simulate_arrivals(map, probe, e, cfg));
  const std::size_t n_pix = map.grid.cells();
  MeasurementSet ms;
  ms.source = SourceTag::wave_delay;
  ms.d.assign(scheme.n_pairs() * n_pix, 0.0);
  ms.mask.assign(ms.d.size(), 0);
  for (std::size_t q = 0; q < scheme.n_pairs(); ++q) {
    const auto [a, b] = scheme.pairs[q];
    const RelativeDelay rd = relative_delays(arrivals[a], arrivals[b]);
    std::copy(rd.delay.begin(), rd.delay.end(), ms.d.begin() + q * n_pix);
    std::copy(rd.valid.begin(), rd.valid.end(), ms.mask.begin() + q * n_pix);
  }
  ms.apply_mask();
  return ms;
}

RFChannelData simulate_channel_data(const AcousticMedium& medium, const Probe& probe, int tx,
                                    const WaveSimConfig& cfg) {
  // Reconstruction grid covered by the simulation, used to size the record.
  Grid g;
  g.dz = g.dx = medium.grid.ds * cfg.refine;
  g.n_z = (medium.grid.n_z - medium.grid.sponge) / cfg.refine;
  g.n_x = (medium.grid.n_x - 2 * medium.grid.sponge) / cfg.refine;
  g.origin = {0.0, medium.grid.x_left + medium.grid.sponge * medium.grid.ds};

  const Point src = probe.element(tx);
  RFChannelData rf;
  rf.pulse = cfg.pulse();
  rf.tx_element = tx;
  rf.n_elements = probe.n_elements;
  FdtdOptions opt;
  opt.cfl = cfg.cfl;
  opt.record_stride = cfg.record_stride;
  const double c_slow = std::min(min_speed(medium), cfg.assumed_sos);
  opt.t_end = 1.1 * longest_echo_path(g, probe, src) / c_slow + 2.0 * rf.pulse.duration();
  std::vector<Point> receivers(probe.n_elements);
  for (int e = 0; e < probe.n_elements; ++e) receivers[e] = probe.element(e);
  Recording rec = run_fdtd(medium, src.x, rf.pulse, receivers, opt);
  rf.fs = rec.fs;
  rf.n_samples = rec.n_samples;
  rf.samples = std::move(rec.traces);
  return rf;
}

void mute_direct_arrivals(RFChannelData& rf, const Probe& probe, double speed) {
  const Point src = probe.element(rf.tx_element);
  for (int e = 0; e < rf.n_elements; ++e) {
    const Point rx = probe.element(e);
    const double t_end = std::hypot(rx.z - src.z, rx.x - src.x) / speed + rf.pulse.duration();
    const auto stop = std::min(rf.n_samples, static_cast<std::size_t>(std::ceil(t_end * rf.fs)));
    std::fill_n(rf.samples.begin() + e * rf.n_samples, stop, 0.0f);
  }
}

Frame das_beamform(const RFChannelData& rf, const Probe& probe, const Grid& grid, double assumed_sos,
                   int axial_oversampling) {
  if (!(assumed_sos > 0.0)) throw std::invalid_argument("assumed sound speed must be positive");
  if (axial_oversampling < 1) throw std::invalid_argument("axial oversampling must be >= 1");
  if (rf.n_elements != probe.n_elements) throw std::invalid_argument("channel count does not match the probe");
  Frame f;
  f.n_lines = grid.n_x;
  f.n_axial = grid.n_z * axial_oversampling;
  f.dz = grid.dz / axial_oversampling;
  f.values.assign(static_cast<std::size_t>(f.n_lines) * f.n_axial, 0.0);
  f.valid.assign(f.values.size(), 1);

  const int ne = probe.n_elements;
  std::vector<double> apod(ne), ex(ne);
  for (int e = 0; e < ne; ++e) {
    apod[e] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * (e + 1) / (ne + 1)));
    ex[e] = probe.element(e).x;
  }
  const Point src = probe.element(rf.tx_element);
  const double scale = rf.fs / assumed_sos;
  const double last = static_cast<double>(rf.n_samples - 1);

#pragma omp parallel for schedule(static)
  for (int ix = 0; ix < f.n_lines; ++ix) {
    const double x = grid.cell_center(0, ix).x;
    for (int k = 0; k < f.n_axial; ++k) {
      const double z = grid.origin.z + k * f.dz;
      const double t_tx = std::hypot(z - src.z, x - src.x);
      double acc = 0.0;
      bool ok = true;
      for (int e = 0; e < ne; ++e) {
        const double s = (t_tx + std::hypot(z, x - ex[e])) * scale;
        if (s >= last) {
          ok = false;
          continue;
        }
        const auto i0 = static_cast<std::size_t>(s);
        const double w = s - i0;
        const float* ch = rf.samples.data() + e * rf.n_samples;
        acc += apod[e] * ((1.0 - w) * ch[i0] + w * ch[i0 + 1]);
      }
      const std::size_t idx = static_cast<std::size_t>(ix) * f.n_axial + k;
      f.values[idx] = ok ? acc : 0.0;
      f.valid[idx] = ok ? 1 : 0;
    }
  }
  return f;
}

Tracking track_displacements(const Frame& a, const Frame& b, std::span<const std::pair<int, int>> centers,
                             int window, int search) {
  if (a.n_lines != b.n_lines || a.n_axial != b.n_axial || a.dz != b.dz)
    throw std::invalid_argument("track_displacements: frames on different grids");
  if (window < 2 || search < 1) throw std::invalid_argument("track_displacements: window >= 2 and search >= 1");
  Tracking t;
  t.shift.assign(centers.size(), 0.0);
  t.correlation.assign(centers.size(), 0.0);
  t.valid.assign(centers.size(), 0);
  const int n = a.n_axial;
  const int half = window / 2;

#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const auto [ix, kc] = centers[c];
    const auto la = a.line(ix), lb = b.line(ix);
    const bool frame_ok = a.valid[static_cast<std::size_t>(ix) * n + kc] && b.valid[static_cast<std::size_t>(ix) * n + kc];
    auto sample = [n](std::span<const double> line, int k) { return (k >= 0 && k < n) ? line[k] : 0.0; };

    // NCC of the A window at ka against the B window at kb
    auto ncc_at = [&](int ka, int kb, double* var_out) {
      double mean_a = 0.0, mean_b = 0.0;
      for (int j = -half; j < window - half; ++j) {
        mean_a += sample(la, ka + j);
        mean_b += sample(lb, kb + j);
      }
      mean_a /= window;
      mean_b /= window;
      double var_a = 0.0, var_b = 0.0, cov = 0.0;
      for (int j = -half; j < window - half; ++j) {
        const double da = sample(la, ka + j) - mean_a;
        const double db = sample(lb, kb + j) - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
      }
      if (var_out) *var_out = var_a;
      return (var_a > 0.0 && var_b > 0.0) ? cov / std::sqrt(var_a * var_b) : 0.0;
    };

    // Average of tracking A forward into B and B backward into A. A one-sided
    // window makes the neighbours of the peak lopsided and biases the
    // parabola even for identical frames.
    double var_a = 0.0;
    std::vector<double> ncc(2 * search + 1, 0.0);
    ncc[search] = ncc_at(kc, kc, &var_a);
    for (int lag = 1; lag <= search; ++lag) {
      ncc[search + lag] = 0.5 * (ncc_at(kc, kc + lag, nullptr) + ncc_at(kc - lag, kc, nullptr));
      ncc[search - lag] = 0.5 * (ncc_at(kc, kc - lag, nullptr) + ncc_at(kc + lag, kc, nullptr));
    }
    if (!frame_ok || !(var_a > 0.0)) continue;
    const auto best = static_cast<int>(std::max_element(ncc.begin(), ncc.end()) - ncc.begin());
    double frac = 0.0;
    if (best > 0 && best < 2 * search) frac = parabola_offset(ncc[best - 1], ncc[best], ncc[best + 1]);
    t.shift[c] = best - search + frac;
    t.correlation[c] = std::clamp(ncc[best], -1.0, 1.0);
    t.valid[c] = ncc[best] != 0.0 ? 1 : 0;
  }
  return t;
}

Tracking track_pixels(const Frame& a, const Frame& b, const Grid& grid, int axial_oversampling, int window,
                      int search) {
  std::vector<std::pair<int, int>> centers(grid.cells());
  for (int iz = 0; iz < grid.n_z; ++iz)
    for (int ix = 0; ix < grid.n_x; ++ix)
      centers[grid.index(iz, ix)] = {ix, axial_oversampling * iz + axial_oversampling / 2};
  return track_displacements(a, b, centers, window, search);
}

std::vector<Frame> simulate_frames(const SoSMap& map, const Probe& probe, const TxPairScheme& scheme,
                                   std::uint64_t seed, const WaveSimConfig& cfg) {
  scheme.validate(probe);
  const AcousticMedium medium = make_scatter_medium(map, seed, cfg);
  std::vector<Frame> frames;
  for (int e : scheme.tx_elements) {
    RFChannelData rf = simulate_channel_data(medium, probe, e, cfg);
    mute_direct_arrivals(rf, probe, cfg.assumed_sos);
    frames.push_back(das_beamform(rf, probe, map.grid, cfg.assumed_sos, cfg.axial_oversampling));
  }
  return frames;
}

MeasurementSet measurements_from_frames(std::span<const Frame> frames, const TxPairScheme& scheme, const Grid& grid,
                                        const WaveSimConfig& cfg) {
  if (frames.size() != scheme.n_tx()) throw std::invalid_argument("one frame per transmit expected");
  const std::size_t n_pix = grid.cells();
  const double dzf = grid.dz / cfg.axial_oversampling;
  const int window = std::max(2, static_cast<int>(std::lround(cfg.window_wavelengths * cfg.wavelength() / dzf)));
  MeasurementSet ms;
  ms.source = SourceTag::full_pipeline;
  ms.reference_slowness = 1.0 / cfg.assumed_sos;
  ms.d.assign(scheme.n_pairs() * n_pix, 0.0);
  ms.mask.assign(ms.d.size(), 0);
  for (std::size_t q = 0; q < scheme.n_pairs(); ++q) {
    const auto [a, b] = scheme.pairs[q];
    const Tracking tr = track_pixels(frames[a], frames[b], grid, cfg.axial_oversampling, window, cfg.search);
    for (std::size_t p = 0; p < n_pix; ++p) {
      const bool ok = tr.valid[p] && tr.correlation[p] >= cfg.ncc_threshold;
      ms.mask[q * n_pix + p] = ok ? 1 : 0;
      ms.d[q * n_pix + p] = ok ? -2.0 * tr.shift[p] * dzf / cfg.assumed_sos : 0.0;
    }
  }
  ms.apply_mask();
  return ms;
}

MeasurementSet full_pipeline_measurements(const SoSMap& map, const Probe& probe, const TxPairScheme& scheme,
                                          std::uint64_t seed, const WaveSimConfig& cfg) {
  const auto frames = simulate_frames(map, probe, scheme, seed, cfg);
  return measurements_from_frames(frames, scheme, map.grid, cfg);
}

}  // namespace sosvn
