#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sosvn/conditioning.hpp"
#include "sosvn/geometry.hpp"
#include "sosvn/measurement.hpp"
#include "sosvn/phantoms.hpp"

namespace sosvn {

/// Piecewise-linear function on equally spaced knots over [lo, hi], constant
/// beyond the range.
struct PiecewiseLinear {
  double lo = -1.0;
  double hi = 1.0;
  std::vector<double> y;

  double operator()(double z) const;
  double derivative(double z) const;

  /// y_k = slope * knot_k.
  static PiecewiseLinear ramp(int knots, double half_range, double slope);
  static PiecewiseLinear constant(int knots, double lo, double hi, double value);
};

namespace pwl {

/// Segment lookup shared by evaluation and the knot gradient. Positions that
/// land on a knot (within 1e-12 in knot units) are snapped onto it.
struct Locate {
  int k = 0;          // left knot of the segment
  double w = 0.0;     // weight of knot k + 1
  int side = 0;       // -1 below the range, +1 above, 0 inside
};

Locate locate(double z, double lo, double hi, std::size_t knots);
double eval(std::span<const double> y, double lo, double hi, double z);
/// Value and slope at z; the slope is 0 outside the range.
double eval(std::span<const double> y, double lo, double hi, double z, double& slope);
/// Adds weight * d f(z) / d y into grad.
void accumulate_knot_grad(std::span<double> grad, double lo, double hi, double z, double weight);

}  // namespace pwl

struct VNConfig {
  int layers = 5;
  int filters = 8;
  int kernel_size = 8;
  int knots = 35;
  int chi_knots = 35;
  double psi_slope = 0.01;
  double phi_slope = 0.01;
  double chi_data = 1.0;
  double chi_reg = 0.1;
  double gamma_raw = 0.0;
  // Target of the initial data step, relative to 1 / lambda_max(L^T L).
  double data_step = 0.5;

  void validate() const;
};

/// Learned parameters of one unrolled layer. Trainable arrays are visited by
/// for_each_array; the half-ranges are maintained by the range tracker.
struct VNLayerParams {
  std::vector<double> log_precond;  // P = exp(log_precond), one per measurement row
  std::vector<double> psi;          // knots of the data potential
  double psi_range = 1.0;
  std::vector<double> kernels;      // filters * k * k, row-major per filter
  std::vector<double> kernel_mean;  // per-filter mean after standardization
  std::vector<double> weight_root;  // W = weight_root^2, filters * valid cells
  std::vector<double> phi;          // filters * knots
  std::vector<double> phi_range;    // per filter
  std::vector<double> chi_data;     // knots over u in [0, 1]
  std::vector<double> chi_reg;
  std::vector<double> gamma_raw;    // one value; gamma = logistic(gamma_raw)

  template <class F>
  void for_each_array(F&& f) {
    f("log_precond", log_precond);
    f("psi", psi);
    f("kernels", kernels);
    f("kernel_mean", kernel_mean);
    f("weight_root", weight_root);
    f("phi", phi);
    f("chi_data", chi_data);
    f("chi_reg", chi_reg);
    f("gamma_raw", gamma_raw);
  }
  template <class F>
  void for_each_array(F&& f) const {
    const_cast<VNLayerParams*>(this)->for_each_array(
        [&](const char* name, std::vector<double>& v) { f(name, static_cast<const std::vector<double>&>(v)); });
  }

  double gamma() const;
};

/// Dimensions the parameters were built for.
struct VNShape {
  int n_z = 0;
  int n_x = 0;
  int n_pairs = 0;
  std::size_t rows() const { return static_cast<std::size_t>(n_pairs) * n_z * n_x; }
  std::size_t pixels() const { return static_cast<std::size_t>(n_z) * n_x; }
  bool operator==(const VNShape&) const = default;
};

struct VNParams {
  VNConfig config;
  VNShape shape;
  std::uint64_t seed = 0;
  std::vector<VNLayerParams> layers;

  /// Same shape with every trainable array zeroed.
  VNParams zeros_like() const;
  /// Throws std::invalid_argument when `L` does not match the parameter shape.
  void check_compatible(const RayMatrix& L) const;
  std::size_t parameter_count() const;
};

/// Kernel standardization: zero mean, unit (population) variance, then the
/// learned mean is added.
std::vector<double> standardize_kernel(std::span<const double> kernel, double mean);

/// Valid cross-correlation of an interleaved image batch with a k x k kernel:
/// out(a, b) = sum_uv kernel(u, v) in(a + u, b + v).
void correlate_valid(std::span<const double> kernel, int k, std::span<const double> in, int n_z, int n_x,
                     std::size_t batch, std::span<double> out);
/// Adjoint of correlate_valid, accumulated into `out` (zero-padded).
void correlate_valid_adjoint(std::span<const double> kernel, int k, std::span<const double> in, int n_z, int n_x,
                             std::size_t batch, std::span<double> out);
/// Kernel gradient of correlate_valid: out(u, v) += sum_{a,b,s} g(a, b) in(a + u, b + v).
void correlate_kernel_grad(std::span<const double> in, std::span<const double> g, int k, int n_z, int n_x,
                           std::size_t batch, std::span<double> out);

/// Largest eigenvalue of L^T L by power iteration.
double estimate_lambda_max(const RayMatrix& L, int iterations = 60, std::uint64_t seed = 1);

/// Parameters before range calibration. Ranges are placeholders until
/// calibrate_ranges runs.
VNParams init_params(const VNConfig& config, const RayMatrix& L, std::uint64_t seed);

/// One standardized sample in network coordinates.
struct VNSample {
  std::vector<double> d;                // standardized, zero on masked rows
  std::vector<std::uint8_t> mask;
  double u = 0.0;
  std::vector<double> target;           // standardized slowness, empty at inference
  Standardization standardization;
};

/// Standardizes a measurement set (absolute delays) and optionally its truth.
VNSample make_sample(const MeasurementSet& ms, const RayMatrix& L, const SoSMap* truth = nullptr,
                     OffsetMode mode = OffsetMode::masked);

/// Per-layer intermediates of a batched forward pass, interleaved by sample.
struct VNTape {
  std::size_t batch = 0;
  std::vector<double> d, mask, u;
  std::vector<std::vector<double>> x;      // x_0 .. x_I
  std::vector<std::vector<double>> mom;    // m_0 .. m_I
  std::vector<std::vector<double>> resid;  // L x_{i-1} - d per layer
  std::vector<std::vector<double>> filt;   // filter responses per layer, filters * valid * batch
  std::vector<std::vector<double>> data_grad, reg_grad;
  std::vector<std::vector<double>> kernels_std;  // standardized kernels per layer
};

/// Runs the unrolled network on a batch of samples; keeps every intermediate.
VNTape vn_forward_batch(const VNParams& params, const RayMatrix& L, std::span<const VNSample* const> samples);

/// Standardized iterate i (0..I) of sample s from a tape.
std::vector<double> tape_iterate(const VNTape& tape, std::size_t layer, std::size_t sample);

struct VNOutput {
  std::vector<std::vector<double>> iterates;  // standardized x_1 .. x_I
  SoSMap map;
  Standardization standardization;
  bool diverged = false;
};

/// Single-sample inference from a measurement set.
VNOutput vn_forward(const VNParams& params, const RayMatrix& L, const MeasurementSet& ms,
                    OffsetMode mode = OffsetMode::masked);

/// Sets every half-range to the 95th percentile of its pre-activation
/// magnitudes, layer by layer, on the given batch.
void calibrate_ranges(VNParams& params, const RayMatrix& L, std::span<const VNSample* const> samples);

/// 95th percentile of |pre-activation| per potential for one tape: index 0 is
/// the data potential, 1.. the filters. One vector per layer.
std::vector<std::vector<double>> preactivation_levels(const VNParams& params, const VNTape& tape);

}  // namespace sosvn
