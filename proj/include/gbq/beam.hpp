#pragma once

#include <iosfwd>
#include <vector>

#include "gbq/model.hpp"
#include "gbq/types.hpp"

namespace gbq {

enum class Mode { plus, minus };

inline double sign(Mode m) { return m == Mode::plus ? 1.0 : -1.0; }
inline const char* to_string(Mode m) { return m == Mode::plus ? "+" : "-"; }

/// First-order beam coefficients at one time for one mode.
struct BeamState {
  double t = 0.0;
  double phi0 = 0.0;  // phase constant
  Vec q;              // ray position
  Vec p;              // ray slowness
  CMat M;             // phase Hessian, complex symmetric
  cplx a00;           // leading amplitude
  Mode mode = Mode::plus;
};

/// Time derivative of every BeamState field.
struct BeamRates {
  double phi0 = 0.0;
  Vec q;
  Vec p;
  CMat M;
  cplx a00;
};

BeamRates ode_rhs(const BeamState& s, const MediumModel& m, const Vec& y);

BeamState init_beam(const Vec& z, const Vec& y, const InitialWaveData& data,
                    const MediumModel& m, Mode mode);

/// Dormand-Prince 5(4) step control. `h_max` also bounds the gap between
/// dense-output nodes, which sets the cubic Hermite interpolation error.
struct StepControl {
  double atol = 1e-10;
  double rtol = 1e-10;
  double h_max = 1e-2;
  double h_min = 1e-12;
  double symmetry_tol = 1e-8;
  long max_steps = 2'000'000;
};

class BeamTrajectory {
 public:
  Mode mode = Mode::plus;
  Vec z;
  Vec y;
  double H0 = 0.0;  // c(z, y) |grad phi0(z, y)|

  double t_end() const { return times_.empty() ? 0.0 : times_.back(); }
  const std::vector<double>& times() const { return times_; }
  std::size_t size() const { return times_.size(); }
  BeamState sample(std::size_t k) const;

  /// Cubic Hermite interpolation between accepted steps; exact at nodes.
  BeamState state_at(double t) const;

  double max_hamiltonian_drift() const { return max_h_drift_; }  // relative to H0
  double max_asymmetry() const { return max_asym_; }             // before symmetrization
  double min_imag_eigenvalue() const { return min_imag_eig_; }

  /// Columns: t, q.., p.., Re/Im M (row-major), Re/Im a00, H drift.
  void write_csv(std::ostream& os) const;

 private:
  friend BeamTrajectory propagate(const Vec&, const Vec&, const InitialWaveData&,
                                  const MediumModel&, Mode, double, const StepControl&);
  int n_ = 0;
  int stride_ = 0;
  std::vector<double> times_;
  std::vector<double> states_;  // packed, stride_ per sample
  std::vector<double> rates_;   // packed right-hand sides
  std::vector<double> drift_;
  double max_h_drift_ = 0.0;
  double max_asym_ = 0.0;
  double min_imag_eig_ = kInf;
};

BeamTrajectory propagate(const Vec& z, const Vec& y, const InitialWaveData& data,
                         const MediumModel& m, Mode mode, double T,
                         const StepControl& control = {});

/// Smallest eigenvalue of Im M.
double min_imag_eigenvalue(const CMat& M);

/// All beams for one parameter value: launch grid, weights and trajectories.
struct BeamFan {
  Vec y;
  std::vector<Mode> modes;
  LaunchGrid grid;              // full grid, before filtering
  std::vector<Vec> z;           // active launch points
  std::vector<double> weights;  // their trapezoidal weights
  std::vector<BeamTrajectory> plus;
  std::vector<BeamTrajectory> minus;
  double T = 0.0;
  int n = 1;

  bool has(Mode m) const;
  const std::vector<BeamTrajectory>& trajectories(Mode m) const {
    return m == Mode::plus ? plus : minus;
  }
  std::size_t beam_count() const { return plus.size() + minus.size(); }
};

/// Propagates one beam per (active launch point, mode). Runs the trajectories
/// in an OpenMP loop; a failure is rethrown with the offending z attached.
BeamFan build_fan(const ScenarioPreset& s, const Vec& y, double T, double z_spacing,
                  const std::vector<Mode>& modes, const StepControl& control = {});

}  // namespace gbq
