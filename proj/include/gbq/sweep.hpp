#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gbq/qoi.hpp"

namespace gbq {

/// Where parameter derivatives come from: a private stencil y +- k h_y around
/// every cell, or differences between neighbouring cells of the table.
enum class StencilSource { cell, table };

struct SweepPlan {
  std::shared_ptr<const ScenarioPreset> scenario;
  std::vector<double> epsilons;
  /// Points per axis of a uniform grid over `box`; with `diagonal` a single
  /// count of r values in [0, 1] along the scenario's diagonal path.
  std::vector<int> counts;
  std::optional<Box> box;  // default: Gamma_c
  bool diagonal = false;
  int axis = 0;            // derivative axis on product grids

  QoISpec qoi;
  double t = -1.0;  // space kind only; < 0: scenario default
  std::vector<Mode> modes{Mode::plus, Mode::minus};
  CutoffSpec cutoff;

  std::vector<int> sigmas{0};
  StencilSource source = StencilSource::cell;
  /// Cell-stencil step: h_y_eps * epsilon when positive, else h_y.
  double h_y = 1e-3;
  double h_y_eps = 0.0;

  double z_factor = 0.5;  // launch spacing = z_factor * sqrt(eps)
  double T = -1.0;        // fan horizon; < 0: the QoI time or window end
  /// Cells run concurrently on this many threads; 0 leaves the threads to
  /// the field kernels instead.
  int workers = 0;
  double max_failure_fraction = 0.01;

  /// Throws InvalidPlan.
  void validate() const;
  int cell_count() const;
  /// Parameter value of cell i (and its r on a diagonal).
  Vec cell_point(int i, double* r = nullptr) const;
  /// Parameter-space step per unit of the derivative variable: the axis unit
  /// vector, or the path direction on a diagonal (derivatives in r).
  Vec derivative_direction() const;
  double step(double epsilon) const;
  /// Fan horizon needed by `q` (plan.T when set).
  double horizon(const QoISpec& q) const;
  double qoi_time() const;
};

struct SweepRow {
  double epsilon = 0.0;
  int cell = 0;
  double r = std::nan("");
  Vec y;
  std::vector<double> values;  // one per sigma of the table
  std::string error;           // empty when the cell succeeded
};

struct SweepTable {
  std::string scenario;
  std::string qoi;
  int N = 1;
  bool diagonal = false;
  std::vector<int> sigmas;
  std::vector<double> epsilons;
  std::vector<SweepRow> rows;  // epsilon-major, then cell
  std::vector<std::string> failures;
  double seconds = 0.0;

  /// Values of sigma index k at one epsilon, in cell order.
  std::vector<double> series(double epsilon, int k) const;
  std::vector<double> coordinate(double epsilon) const;  // r or y along the axis

  /// Columns: epsilon, cell, [r,] y1..yN, d<sigma>..., status.
  void write_csv(std::ostream& os) const;
};

/// Builds one fan per (epsilon, stencil point) and evaluates the QoI.
/// Failed cells keep NaN values and their error; more than
/// max_failure_fraction failed cells raise SweepFailed.
SweepTable run_sweep(const SweepPlan& plan);

/// Several QoIs on shared fans: one table per entry of `qois`, plan.qoi ignored.
std::vector<SweepTable> run_sweeps(const SweepPlan& plan, const std::vector<QoISpec>& qois);

/// Parses the CSV written by SweepTable::write_csv.
SweepTable read_sweep_table(std::istream& is);

/// Iterated order-2 central differences of the sigma = 0 column along the
/// table's single grid axis with spacing h. Boundary cells are dropped.
/// Throws StencilOutOfDomain when the table is too short or not 1-D.
SweepTable fd_derivative(const SweepTable& table, int sigma, double h);

/// Coefficients c_k, k = -m..m, with f^(sigma) ~ sum c_k f(k h) / h^sigma.
std::vector<double> central_stencil(int sigma);

enum class ScalingClass { bounded, oscillatory, indeterminate };
const char* to_string(ScalingClass c);

struct ScalingFit {
  int sigma = 0;
  std::vector<double> epsilons;
  std::vector<double> amplitudes;  // max |d^sigma Q| over the grid
  std::vector<double> ratios;      // A(eps_{k+1}) / A(eps_k), epsilons sorted descending
  double rho = 0.0;                // A ~ eps^-rho
  ScalingClass cls = ScalingClass::indeterminate;
};

/// Log-log least squares of the per-epsilon amplitudes; needs >= 3 epsilons.
ScalingFit fit_scaling(const SweepTable& table, int sigma);

/// {"sigma", "epsilons", "amplitudes", "ratios", "rho", "class"}
std::string scaling_json(const std::vector<ScalingFit>& fits);

}  // namespace gbq
