#include <cmath>

#include "gbq/field_kernel.hpp"

namespace gbq::kernel {

void field_grid_serial(const FanSnapshot& snap, const KernelParams& kp, const PointGrid& g, cplx* out) {
  const cplx iz(0.0, 1.0 / kp.epsilon);
  std::size_t idx = 0;
  for (int r = 0; r < g.row_count(); ++r) {
    for (int i = g.rows[r].first; i < g.rows[r].second; ++i, ++idx) {
      const Vec x = g.point(r, i);
      cplx acc = 0.0;
      for (const FrozenBeam& b : snap.beams) {
        const Vec d = x - b.s.q;
        acc += b.w * beam_multiplier(b, kp.ord, d, kp.epsilon, kp.cutoff) * std::exp(iz * eval_phase(b.s, x));
      }
      out[idx] = kp.prefactor * acc;
    }
  }
}

}  // namespace gbq::kernel
