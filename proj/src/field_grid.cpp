#include <stdexcept>

#include "gbq/field_kernel.hpp"

namespace gbq {

int PointGrid::row_count() const { return counts[1] * counts[2]; }

Vec PointGrid::row_coords(int r) const {
  Vec x = lo;
  if (n >= 2) x(1) = lo(1) + (r % counts[1]) * h(1);
  if (n >= 3) x(2) = lo(2) + (r / counts[1]) * h(2);
  return x;
}

Vec PointGrid::point(int r, int i) const {
  Vec x = row_coords(r);
  x(0) = lo(0) + i * h(0);
  return x;
}

PointGrid PointGrid::full(const Vec& lo, const Vec& h, const std::array<int, kMaxDim>& counts) {
  PointGrid g;
  g.n = static_cast<int>(lo.size());
  g.lo = lo;
  g.h = h;
  g.counts = {1, 1, 1};
  for (int k = 0; k < g.n; ++k) g.counts[k] = counts[k];
  g.rows.assign(g.row_count(), {0, g.counts[0]});
  g.finalize();
  return g;
}

void PointGrid::finalize() {
  if (static_cast<int>(rows.size()) != row_count()) throw std::logic_error("PointGrid rows/count mismatch");
  offsets.assign(rows.size() + 1, 0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const int len = std::max(0, rows[r].second - rows[r].first);
    offsets[r + 1] = offsets[r] + static_cast<std::size_t>(len);
  }
}

KernelParams kernel_params(const FieldSpec& fs, const DerivativeOrder& ord) {
  KernelParams kp;
  kp.epsilon = fs.epsilon;
  kp.prefactor = fs.prefactor();
  kp.truncation = fs.truncation;
  kp.cutoff = fs.cutoff;
  kp.ord = ord;
  return kp;
}

void field_on_grid(const FieldSpec& fs, const FanSnapshot& snap, const DerivativeOrder& ord,
                   const PointGrid& g, std::vector<cplx>& out, Backend backend) {
  check_order(ord, g.n);
  if (!ord.analytic()) throw std::logic_error("field_on_grid(snapshot) needs an analytic order");
  if (ord.p > 0 && !snap.beams.empty() && snap.beams.front().r.q.size() == 0)
    throw std::logic_error("snapshot was frozen without rates");
  out.assign(g.size(), cplx(0.0));
  const KernelParams kp = kernel_params(fs, ord);
  if (backend == Backend::omp) kernel::field_grid_omp(snap, kp, g, out.data());
  else kernel::field_grid_serial(snap, kp, g, out.data());
}

void field_on_grid(const FieldSpec& fs, const DerivativeOrder& ord, double t, const PointGrid& g,
                   std::vector<cplx>& out, Backend backend) {
  check_order(ord, g.n);
  if (ord.analytic()) {
    field_on_grid(fs, freeze(fs, t, ord.p > 0), ord, g, out, backend);
    return;
  }
  DerivativeOrder lower = ord;
  lower.p -= 1;
  const double h = fs.fd_step();
  std::vector<cplx> up, dn;
  field_on_grid(fs, lower, t + h, g, up, backend);
  field_on_grid(fs, lower, t - h, g, dn, backend);
  out.resize(up.size());
  const double f = fs.epsilon / (2 * h);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f * (up[i] - dn[i]);
}

}  // namespace gbq
