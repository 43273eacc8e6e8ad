#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sosvn/conditioning.hpp"
#include "sosvn/geometry.hpp"
#include "sosvn/measurement.hpp"
#include "sosvn/phantoms.hpp"

namespace sosvn {

enum class DerivativeKernel { forward, sobel, roberts };

/// Weighted multi-angle total variation. Angles are measured from the depth
/// axis, so 0 degrees is the axial derivative.
struct AwtvConfig {
  std::vector<double> angles_deg{0.0, 45.0, 90.0, 135.0};
  std::vector<double> weights{1.0, 0.5, 0.2, 0.5};
  double lambda = 1e-2;
  double epsilon = 1e-8;
  DerivativeKernel kernel = DerivativeKernel::forward;

  void validate() const;
};

struct LbfgsConfig {
  int memory = 10;
  int max_iterations = 500;
  double gradient_tolerance = 1e-8;  // relative to the initial gradient norm
  double armijo = 1e-4;
  int max_backtracks = 40;

  void validate() const;
};

/// Smoothed absolute value sqrt(t^2 + eps) - sqrt(eps); exactly 0 at 0.
inline double smooth_abs(double t, double eps) { return std::sqrt(t * t + eps) - std::sqrt(eps); }

/// Directional derivative operator on a grid: one output per position where
/// the whole stencil fits.
class DirectionalDerivative {
 public:
  DirectionalDerivative(const Grid& grid, double angle_rad, DerivativeKernel kernel);
  std::size_t outputs() const { return anchors_.size(); }
  void apply(std::span<const double> x, std::span<double> out) const;
  void apply_transpose(std::span<const double> y, std::span<double> out) const;

 private:
  struct Tap {
    std::ptrdiff_t offset;
    double coef;
  };
  std::vector<std::size_t> anchors_;  // reference cell of each output
  std::vector<Tap> taps_;             // offsets relative to the anchor, excluding it
};

struct ObjectiveTerms {
  double value = 0.0;
  double data = 0.0;
  double regularizer = 0.0;
};

/// Smoothed l1 data misfit over valid rows plus lambda times the weighted
/// multi-angle TV. Writes the gradient into `grad`.
class AwtvObjective {
 public:
  AwtvObjective(const RayMatrix& L, std::span<const double> d, std::span<const std::uint8_t> mask, AwtvConfig cfg);
  ObjectiveTerms evaluate(std::span<const double> x, std::span<double> grad) const;
  std::size_t dimension() const { return L_.cols(); }

 private:
  const RayMatrix& L_;
  std::vector<double> d_;
  std::vector<std::uint8_t> mask_;
  AwtvConfig cfg_;
  std::vector<DirectionalDerivative> ops_;
};

struct LbfgsResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  bool line_search_failed = false;
  std::vector<double> history;  // objective after each accepted iteration, starting with x0
};

using Objective = std::function<double(std::span<const double>, std::span<double>)>;

/// Limited-memory BFGS with two-loop recursion and backtracking Armijo line
/// search. Curvature pairs with s'y <= 0 are skipped.
LbfgsResult minimize_lbfgs(const Objective& f, std::vector<double> x0, const LbfgsConfig& cfg);

struct ClassicalResult {
  SoSMap map;
  Standardization standardization;
  LbfgsResult solver;
  double seconds = 0.0;
  bool diverged = false;
};

/// Standardizes, minimizes from x' = 0, and maps back to speed of sound.
ClassicalResult reconstruct_classical(const MeasurementSet& ms, const RayMatrix& L, const AwtvConfig& awtv,
                                      const LbfgsConfig& lbfgs, OffsetMode mode = OffsetMode::masked);

}  // namespace sosvn
