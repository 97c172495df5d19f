#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gbq/types.hpp"

namespace gbq {

using ScalarField = std::function<double(const Vec& x, const Vec& y)>;
using GradientField = std::function<Vec(const Vec& x, const Vec& y)>;
using HessianField = std::function<Mat(const Vec& x, const Vec& y)>;

/// Wave speed c(x, y) together with its spatial derivatives.
struct MediumModel {
  ScalarField eval;
  GradientField grad_x;
  HessianField hess_x;
  double c_min = 0.0;
  double c_max = 0.0;
  bool x_independent = false;

  /// Builds grad/hess from centered differences of `eval` (step 1e-5).
  /// Logs a warning to stderr: these are not exact and degrade
  /// Riccati accuracy.
  static MediumModel with_fd_derivatives(ScalarField eval, int n, double c_min,
                                         double c_max, bool x_independent = false);
};

/// Initial amplitudes B0, B1 and phase phi0 with derivatives of the phase.
struct InitialWaveData {
  ScalarField B0;
  ScalarField B1;
  ScalarField phi0;
  GradientField grad_phi0;
  HessianField hess_phi0;
  Box support;  // K0
};

/// QoI test function psi(t, x) and its declared support.
struct WindowFunction {
  std::function<double(double t, const Vec& x)> psi;
  Box support;  // K1
  double t_lo = 0.0;
  double t_hi = 0.0;
  bool time_dependent = false;
};

using WeightFunction = std::function<double(double t, const Vec& x, const Vec& y)>;

/// One-parameter line y(r) = origin + r * direction, r in [0, 1].
struct DiagonalPath {
  Vec origin;
  Vec direction;
  Vec at(double r) const { return origin + r * direction; }
};

enum class PhaseKind1D { linear, quadratic };
enum class PhaseKind2D { abs, linear };

struct ScenarioPreset {
  std::string name;
  int n = 1;  // spatial dimension
  int N = 1;  // stochastic dimension
  MediumModel medium;
  InitialWaveData data;
  WindowFunction window;            // space-only psi
  WindowFunction window_spacetime;  // space-time variant
  WeightFunction weight;            // empty means g == 1
  Box parameter_box;                // Gamma_c
  double launch_margin = 0.0;       // launch points with |z_1| < margin are skipped
  double default_time = 1.0;
  std::optional<DiagonalPath> diagonal;

  double g(double t, const Vec& x, const Vec& y) const {
    return weight ? weight(t, x, y) : 1.0;
  }
};

/// B0 below this level is treated as outside the support.
inline constexpr double kAmplitudeTruncation = 1e-8;
/// Windows that are not compactly supported are cut where they drop below this.
inline constexpr double kWindowTruncation = 1e-10;

ScenarioPreset preset_1d(PhaseKind1D phase, double s);
ScenarioPreset preset_2d(PhaseKind2D phase);

/// Names: "1d-linear", "1d-quadratic" (use `s`), "2d-abs", "2d-linear".
ScenarioPreset preset_by_name(const std::string& name, double s = 3.0);
std::vector<std::string> preset_names();

struct ValidationCheck {
  std::string assumption;  // e.g. "A1 speed bounds"
  bool pass = true;
  double worst = 0.0;      // worst deviation seen
  Vec witness_x;
  Vec witness_y;
};

struct ValidationReport {
  bool pass = true;
  std::vector<ValidationCheck> checks;

  /// Throws ValidationFailure naming the first failing check and its witness.
  void throw_if_failed() const;
};

/// Samples `samples` deterministic (x, y) draws and checks speed bounds,
/// derivative consistency against centered differences (step 1e-4, rel.
/// tol 1e-5), the nonzero phase gradient on the launch grid, and window
/// truncation outside the declared supports.
ValidationReport validate_scenario(const ScenarioPreset& s, int samples,
                                   double launch_spacing = 0.05);

/// Uniform launch grid over K0 with trapezoidal weights; before filtering.
struct LaunchGrid {
  std::vector<Vec> points;
  std::vector<double> weights;
  std::vector<int> counts;  // points per axis
  Vec spacing;
  double total_weight() const;
};

LaunchGrid make_launch_grid(const Box& k0, double max_spacing);

/// Launch points kept for propagation: outside the launch margin and with
/// sup over Gamma_c of |B0| >= kAmplitudeTruncation.
std::vector<int> active_launch_points(const ScenarioPreset& s, const LaunchGrid& grid);

}  // namespace gbq
