#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "gbq/field.hpp"

namespace gbq {

/// Tensor grid lo + i * h with, per row, an active index range along axis 0.
/// Rows enumerate the remaining axes with axis 1 fastest. Values of active
/// points are stored row after row.
struct PointGrid {
  int n = 1;
  Vec lo;
  Vec h;
  std::array<int, kMaxDim> counts{1, 1, 1};
  std::vector<std::pair<int, int>> rows;  // [begin, end) along axis 0
  std::vector<std::size_t> offsets;       // start of each row in packed storage

  int row_count() const;
  std::size_t size() const { return offsets.empty() ? 0 : offsets.back(); }
  /// Coordinates along axes >= 1 of row r.
  Vec row_coords(int r) const;
  Vec point(int r, int i) const;

  /// Every point of the box is active.
  static PointGrid full(const Vec& lo, const Vec& h, const std::array<int, kMaxDim>& counts);
  /// Recomputes offsets after `rows` changed.
  void finalize();
};

struct KernelParams {
  double epsilon = 1.0 / 40;
  double prefactor = 1.0;
  double truncation = 36.0;
  CutoffSpec cutoff;
  DerivativeOrder ord;
};

KernelParams kernel_params(const FieldSpec& fs, const DerivativeOrder& ord);

namespace kernel {

/// Row-segment parallel evaluation. Beams are clipped to the interval where
/// Im Phi / eps <= truncation and the exponential is advanced by a
/// multiplicative recurrence. Output is overwritten.
void field_grid_omp(const FanSnapshot& snap, const KernelParams& kp, const PointGrid& g, cplx* out);

/// Pointwise reference: every beam at every point, direct exponentials.
void field_grid_serial(const FanSnapshot& snap, const KernelParams& kp, const PointGrid& g, cplx* out);

}  // namespace kernel

enum class Backend { omp, serial };

/// Scaled derivative of the field on the grid at time t, including the
/// time-difference path for non-analytic orders.
void field_on_grid(const FieldSpec& fs, const DerivativeOrder& ord, double t, const PointGrid& g,
                   std::vector<cplx>& out, Backend backend = Backend::omp);

/// Same, on an existing snapshot (analytic orders only).
void field_on_grid(const FieldSpec& fs, const FanSnapshot& snap, const DerivativeOrder& ord,
                   const PointGrid& g, std::vector<cplx>& out, Backend backend = Backend::omp);

}  // namespace gbq
