#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <vector>

#include "gbq/beam.hpp"
#include "gbq/model.hpp"
#include "gbq/types.hpp"

namespace gbq {

/// Transition B(s): 1 for s <= 0, 0 for s >= 1, 1/(1+exp((2s-1)/(s(1-s)))) between.
double smooth_transition(double s);
/// B, B' and B'' at s.
void smooth_transition_derivs(double s, double& b, double& db, double& d2b);

/// Radial cutoff rho_eta(x) = B((|x| - eta) / eta); eta = inf disables it.
struct CutoffSpec {
  double eta = kInf;

  bool finite() const;
  double profile(const Vec& x) const;
  /// Value, gradient and Hessian of the profile at offset d.
  void derivs(const Vec& d, double& rho, Vec& grad, Mat& hess) const;
};

/// Time order p and spatial multi-index alpha.
struct DerivativeOrder {
  int p = 0;
  std::array<int, kMaxDim> alpha{};

  int spatial_order() const { return alpha[0] + alpha[1] + alpha[2]; }
  int total() const { return p + spatial_order(); }
  bool is_zero() const { return total() == 0; }
  /// Handled directly by the beam kernels without time differencing.
  bool analytic() const { return spatial_order() <= 2 && (p == 0 || (p == 1 && spatial_order() == 0)); }

  static DerivativeOrder time(int p) { DerivativeOrder o; o.p = p; return o; }
  static DerivativeOrder space(int axis) { DerivativeOrder o; o.alpha[axis] = 1; return o; }
};

struct FieldSpec {
  std::shared_ptr<const ScenarioPreset> scenario;
  std::shared_ptr<const BeamFan> fan;
  CutoffSpec cutoff;
  double epsilon = 1.0 / 40;
  std::vector<Mode> modes;
  /// Time step of the difference quotients used for orders beyond the analytic set.
  double fd_step_factor = 1.0 / 20;
  /// Beams are skipped where Im Phi / eps exceeds this.
  double truncation = 36.0;

  double fd_step() const { return fd_step_factor * epsilon; }
  /// (2 pi eps)^(-n/2)
  double prefactor() const;
  void validate() const;
};

/// Modes default to those present in the fan.
FieldSpec make_field_spec(std::shared_ptr<const ScenarioPreset> s, std::shared_ptr<const BeamFan> fan,
                          double epsilon, std::vector<Mode> modes = {}, CutoffSpec cutoff = {});

/// Phi = phi0 + d.p + d^T M d / 2 with d = x - q.
cplx eval_phase(const BeamState& s, const Vec& x);

/// a00 * rho(x - q) * exp(i Phi / eps)
cplx eval_beam(const BeamState& s, const Vec& x, double epsilon, const CutoffSpec& cutoff);

/// One beam frozen at a time, with its rates for time derivatives.
struct FrozenBeam {
  BeamState s;
  BeamRates r;
  double w = 0.0;  // launch quadrature weight
};

struct FanSnapshot {
  double t = 0.0;
  int n = 1;
  std::vector<FrozenBeam> beams;
};

/// Interpolates every beam of the requested modes at t.
FanSnapshot freeze(const FieldSpec& fs, double t, bool with_rates);

/// P such that eps^(p+|alpha|) d_t^p d_x^alpha v = P exp(i Phi / eps) at offset d = x - q.
/// Requires ord.analytic().
cplx beam_multiplier(const FrozenBeam& b, const DerivativeOrder& ord, const Vec& d, double epsilon,
                     const CutoffSpec& cutoff);

cplx eval_field(const FieldSpec& fs, double t, const Vec& x);
cplx eval_field(const FieldSpec& fs, const FanSnapshot& snap, const Vec& x);

/// eps^(p+|alpha|) d_t^p d_x^alpha u. Orders outside the analytic set are
/// built from centred time differences (step fd_step) of the next lower p.
cplx eval_scaled_derivative(const FieldSpec& fs, const DerivativeOrder& ord, double t, const Vec& x);

/// Throws UnsupportedOrder when |alpha| > 2.
void check_order(const DerivativeOrder& ord, int n);

/// CSV rows of x (and x2 in 2D), Re u, Im u, |u| on a uniform grid over `box`.
void write_field_snapshot(std::ostream& os, const FieldSpec& fs, double t, const Box& box,
                          const std::vector<int>& counts);

}  // namespace gbq
