#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sosvn/fdtd.hpp"
#include "sosvn/geometry.hpp"
#include "sosvn/measurement.hpp"
#include "sosvn/phantoms.hpp"

namespace sosvn {

/// Acoustic simulation settings. The desk profile runs at 1 MHz on cells a
/// fifth of the reconstruction pixel; the paper profile at 5 MHz.
struct WaveSimConfig {
  double f_c = 1e6;
  int refine = 5;               // simulation cells per reconstruction pixel (odd keeps pixel centers on cell centers)
  int sponge = 60;
  double sponge_strength = 0.2;
  double cfl = 0.3;
  int record_stride = 2;
  double density = 1000.0;
  double scatter_amplitude = 0.05;  // relative density fluctuation in the full pipeline
  double assumed_sos = 1510.0;      // beamforming and tracking
  int axial_oversampling = 8;       // beamformed samples per reconstruction pixel in depth (even)
  double window_wavelengths = 2.0;  // tracking window length
  int search = 12;                  // tracking search, beamformed samples each side
  double ncc_threshold = 0.8;

  Pulse pulse() const { return Pulse{f_c, 4}; }
  double wavelength() const { return assumed_sos / f_c; }
  void validate() const;

  static WaveSimConfig desk();
  static WaveSimConfig paper();
};

/// First-arrival estimate for one trace.
struct Arrival {
  double time = 0.0;  // seconds
  bool valid = false;
};

/// Lag that maximizes the normalized cross-correlation of `pulse` against
/// `trace` (both sampled at fs), refined by a parabola through the peak.
Arrival estimate_arrival(std::span<const float> trace, std::span<const double> pulse, double fs);

struct ArrivalField {
  std::vector<double> time;         // per pixel, seconds
  std::vector<std::uint8_t> valid;
};

ArrivalField estimate_arrival_times(const Recording& rec, const Pulse& pulse);

/// Element-wise a - b, invalid where either side is.
struct RelativeDelay {
  std::vector<double> delay;
  std::vector<std::uint8_t> valid;
};
RelativeDelay relative_delays(const ArrivalField& a, const ArrivalField& b);

/// Medium with sound speed upsampled from `map` and homogeneous density.
AcousticMedium make_medium(const SoSMap& map, const WaveSimConfig& cfg);
/// Same, with per-cell density 1000 (1 + U(-a, a)), a = cfg.scatter_amplitude.
AcousticMedium make_scatter_medium(const SoSMap& map, std::uint64_t seed, const WaveSimConfig& cfg);

/// Arrival times of the wave emitted by element `tx` at every pixel center.
ArrivalField simulate_arrivals(const SoSMap& map, const Probe& probe, int tx, const WaveSimConfig& cfg);

/// Relative transmit delays for every pair of `scheme`, pair-major.
MeasurementSet wave_delay_measurements(const SoSMap& map, const Probe& probe, const TxPairScheme& scheme,
                                       const WaveSimConfig& cfg);

/// Receive traces of one transmit, element-major.
struct RFChannelData {
  double fs = 0.0;
  std::size_t n_samples = 0;
  int n_elements = 0;
  int tx_element = 0;
  Pulse pulse;
  std::vector<float> samples;

  std::span<const float> channel(int e) const { return {samples.data() + e * n_samples, n_samples}; }
};

RFChannelData simulate_channel_data(const AcousticMedium& medium, const Probe& probe, int tx, const WaveSimConfig& cfg);

/// Zeroes each channel until the direct surface wave from the transmitter has
/// passed (|tx - rx| / speed plus the pulse length).
void mute_direct_arrivals(RFChannelData& rf, const Probe& probe, double speed);

/// Beamformed RF frame: one line per reconstruction column, axially
/// oversampled. Sample k of line ix sits at depth k * dz, so pixel row iz is
/// centered on sample oversampling * iz + oversampling / 2.
struct Frame {
  int n_lines = 0;
  int n_axial = 0;
  double dz = 0.0;
  std::vector<double> values;  // line-major: values[ix * n_axial + k]
  std::vector<std::uint8_t> valid;

  std::span<const double> line(int ix) const { return {values.data() + static_cast<std::size_t>(ix) * n_axial,
                                                       static_cast<std::size_t>(n_axial)}; }
};

/// Delay-and-sum with a fixed full receive aperture and Hann apodization.
Frame das_beamform(const RFChannelData& rf, const Probe& probe, const Grid& grid, double assumed_sos,
                   int axial_oversampling);

struct Tracking {
  std::vector<double> shift;        // samples, B relative to A
  std::vector<double> correlation;  // in [-1, 1]
  std::vector<std::uint8_t> valid;
};

/// Windowed NCC tracking of frame B against frame A at every frame sample
/// listed in `centers` (line, axial index). `window` is the window length in
/// samples, `search` the maximal lag either way.
Tracking track_displacements(const Frame& a, const Frame& b, std::span<const std::pair<int, int>> centers,
                             int window, int search);

/// Tracking at every reconstruction pixel center.
Tracking track_pixels(const Frame& a, const Frame& b, const Grid& grid, int axial_oversampling, int window,
                      int search);

/// Beamformed frames for every transmit of `scheme` (mutes applied).
std::vector<Frame> simulate_frames(const SoSMap& map, const Probe& probe, const TxPairScheme& scheme,
                                   std::uint64_t seed, const WaveSimConfig& cfg);

/// Pair measurements from frames: d = -2 * shift * dz_frame / assumed_sos,
/// valid where the correlation reaches cfg.ncc_threshold.
MeasurementSet measurements_from_frames(std::span<const Frame> frames, const TxPairScheme& scheme, const Grid& grid,
                                        const WaveSimConfig& cfg);

/// Scatter medium, FDTD per transmit, beamforming and tracking. The result
/// holds delays relative to a homogeneous medium at cfg.assumed_sos.
MeasurementSet full_pipeline_measurements(const SoSMap& map, const Probe& probe, const TxPairScheme& scheme,
                                          std::uint64_t seed, const WaveSimConfig& cfg);

}  // namespace sosvn
