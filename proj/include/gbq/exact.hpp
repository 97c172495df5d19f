#pragma once

#include <memory>
#include <vector>

#include "gbq/beam.hpp"
#include "gbq/model.hpp"

namespace gbq {

/// u(t, x) = u+ + u-, u+- = B0(x -+ c t) exp(i phi0(x -+ c t) / eps) / 2, for
/// one parameter value of a 1D scenario whose speed is constant in x and B1 = 0.
struct DAlembertField {
  std::shared_ptr<const ScenarioPreset> scenario;
  Vec y;
  double c = 1.0;
  double epsilon = 1.0 / 40;
};

/// Throws UnsupportedScenario if n != 1, c depends on x, or B1 is not zero.
DAlembertField make_dalembert(std::shared_ptr<const ScenarioPreset> s, const Vec& y, double epsilon);

cplx eval_dalembert(const DAlembertField& f, double t, double x, Mode m);
cplx eval_dalembert(const DAlembertField& f, double t, double x);  // both modes

/// Q = Q+ + Q- + Q0 with Q0 the mode interaction term.
struct ExactQoIDecomposition {
  double plus = 0.0;
  double minus = 0.0;
  double cross = 0.0;
  double total() const { return plus + minus + cross; }
};

/// Trapezoid spacing of the oracle quadratures, relative to epsilon.
inline constexpr double kExactStepFactor = 1.0 / 20;

/// Space-only decomposition at time t; psi(t, x) from `window`.
ExactQoIDecomposition exact_qoi_space(const DAlembertField& f, const WindowFunction& window, double t);

/// Space-time decomposition over [t_lo, t_hi] of `window`.
ExactQoIDecomposition exact_qoi_spacetime(const DAlembertField& f, const WindowFunction& window);

struct GbExactRow {
  double epsilon = 0.0;
  double field_error = 0.0;      // relative L2 at t = 0 over supp psi, two modes
  double space_gb = 0.0;         // one-mode (-) space QoI at t
  double space_exact = 0.0;
  double spacetime_gb = 0.0;     // two-mode space-time QoI
  double spacetime_exact = 0.0;
  double seconds = 0.0;

  double space_error() const;
  double spacetime_error() const;
};

struct GbExactOptions {
  Vec y;                    // empty: centre of Gamma_c
  double t = -1.0;          // < 0: scenario default time
  double z_factor = 0.5;    // launch spacing = z_factor * sqrt(eps)
  double resolution = 8.0;  // QoI grids at eps / resolution
};

/// Per-epsilon comparison of beam results against the closed form.
std::vector<GbExactRow> gb_vs_exact_report(std::shared_ptr<const ScenarioPreset> s,
                                           const std::vector<double>& epsilons, const GbExactOptions& opt = {});

/// Relative L2 error of the two-mode superposition at t = 0 against
/// B0 exp(i phi0 / eps), over the support box of the space window.
double initial_reconstruction_error(const ScenarioPreset& s, const BeamFan& fan, double epsilon);

}  // namespace gbq
