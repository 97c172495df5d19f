#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "gbq/field.hpp"
#include "gbq/field_kernel.hpp"

namespace gbq {

enum class QoIKind { space, spacetime, energy, arias };
enum class QuadratureRule { trapezoid, simpson };

const char* to_string(QoIKind k);
QoIKind qoi_kind_from_string(const std::string& s);

struct QoISpec {
  QoIKind kind = QoIKind::space;
  DerivativeOrder ord;
  WeightFunction g;                      // empty: the scenario weight
  std::optional<WindowFunction> window;  // empty: the scenario window for the kind
  double h_x = 0.0;                      // 0: epsilon / resolution
  double h_t = 0.0;
  double h_x_eps = 0.0;  // used when h_x is 0: h_x_eps * epsilon
  double h_t_eps = 0.0;
  /// Grids must satisfy h <= epsilon / resolution.
  double resolution = 8.0;
  QuadratureRule rule = QuadratureRule::trapezoid;
  /// Adds a Richardson estimate from a second pass at twice the spacing.
  bool estimate_error = false;
  Backend backend = Backend::omp;

  /// Effective spacings at `epsilon`.
  double space_step(double epsilon) const;
  double time_step(double epsilon) const;
};

struct QoIValue {
  double value = 0.0;
  double err_est = std::nan("");
  double h_x = 0.0;
  double h_t = 0.0;
  std::size_t space_nodes = 0;  // evaluated nodes of the last time slice
  std::size_t time_nodes = 0;   // 0 for space-only
  std::string normalization;    // how the epsilon powers were applied
};

/// eps^(2(p+|alpha|)) int g |d_t^p d_x^alpha u|^2 psi dx at time t.
QoIValue qoi_space(const FieldSpec& fs, const QoISpec& spec, double t, const Vec& y);

/// Same integrand integrated over the window's time support as well.
QoIValue qoi_spacetime(const FieldSpec& fs, const QoISpec& spec, const Vec& y);

/// (1,0) with g = 1 plus (0, e_i) with g = c^2, space-time.
QoIValue qoi_energy(const FieldSpec& fs, const WindowFunction& window, const Vec& y, QoISpec base = {});

/// Space-time (2,0).
QoIValue qoi_arias(const FieldSpec& fs, const WindowFunction& window, const Vec& y, QoISpec base = {});

/// Dispatch on spec.kind; `t` is used by the space kind only.
QoIValue evaluate_qoi(const FieldSpec& fs, const QoISpec& spec, const Vec& y, double t);

/// Two-mode value split as Q1 (+ mode) + Q2 (- mode) + 2 Re Q3 (cross term).
struct QoIDecomposition {
  double q_plus = 0.0;
  double q_minus = 0.0;
  cplx q_cross = 0.0;
  double assembled() const { return q_plus + q_minus + 2.0 * q_cross.real(); }
};

/// Space kind at `t`, or space-time when spec.kind is spacetime.
QoIDecomposition qoi_decomposition(const FieldSpec& fs, const QoISpec& spec, const Vec& y, double t = 0.0);

struct AdmissibilityReport {
  double delta = kInf;
  double eta_checked = 0.0;
  double t = 0.0;
  Vec y;
  Vec z;
  Vec x;  // offset from the ray centre
  bool pass = false;
};

/// Offsets sampling the ball |x| <= radius: a symmetric line in 1D, rings
/// of directions in 2D/3D.
std::vector<Vec> admissibility_samples(int n, double radius, int count);

/// Infimum of Im Phi(t, q + x) / |x|^2 over fan beams, t_samples and x_samples.
AdmissibilityReport check_admissibility(const BeamFan& fan, double eta, const std::vector<double>& t_samples,
                                        const std::vector<Vec>& x_samples);

/// R + sup |q| over every stored trajectory sample, plus a 1e-3 margin for
/// interpolation: with this eta the cutoff is 1 on the window support.
double no_cutoff_eta(const BeamFan& fan, const Box& window_support);

}  // namespace gbq
