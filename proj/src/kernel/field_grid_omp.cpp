#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "gbq/field_kernel.hpp"

namespace gbq::kernel {

namespace {

constexpr int kSegment = 512;  // points per work item
constexpr int kReseed = 128;   // recurrence steps between direct exponentials
constexpr int kLanes = 4;

// Plain complex product; std::complex operator* goes through the
// NaN-recovering library routine unless -fcx-limited-range is in effect.
inline cplx mul(cplx a, cplx b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

struct Item {
  int row;
  int i0;
  int i1;
  std::size_t offset;
};

// Half-widths of the box around q holding {d : d^T Im M d <= lim}.
Vec ellipse_halfwidths(const CMat& M, double lim) {
  const Mat im = M.imag();
  const Mat inv = im.inverse();
  Vec w(im.rows());
  for (Eigen::Index k = 0; k < im.rows(); ++k) w(k) = std::sqrt(std::max(0.0, lim * inv(k, k)));
  return w;
}

// Adds coef * exp(iz Phi(d0)) for d0 = lo0 + i h - q0, i in [ia, ib), with
// Phi = a0 + a1 d0 + a2 d0^2 / 2, into (re, im) offset by i0.
void accumulate_fast(int ia, int ib, int i0, double lo0, double h, double q0, cplx coef, cplx iz, cplx a0,
                     cplx a1, cplx a2, cplx K, double* re, double* im) {
  const cplx K2 = mul(K, K), K4 = mul(K2, K2), K6 = mul(K4, K2), K8 = mul(K4, K4), K16 = mul(K8, K8);
  int i = ia;
  while (i < ib) {
    const int stop = std::min(ib, i + kReseed);
    const double d0 = lo0 + i * h - q0;
    cplx e = mul(coef, std::exp(iz * (a0 + d0 * (a1 + 0.5 * a2 * d0))));
    cplx r = std::exp(iz * (a1 * h + a2 * (d0 * h + 0.5 * h * h)));
    double er[kLanes], ei[kLanes], sr[kLanes], si[kLanes];
    for (int j = 0; j < kLanes; ++j) {
      er[j] = e.real();
      ei[j] = e.imag();
      // four-step ratio from lane j: r^4 K^6
      const cplx r2 = mul(r, r);
      const cplx s = mul(mul(r2, r2), K6);
      sr[j] = s.real();
      si[j] = s.imag();
      e = mul(e, r);
      r = mul(r, K);
    }
    const double kr = K16.real(), ki = K16.imag();
    double* pr = re + (i - i0);
    double* pi = im + (i - i0);
    const int blocks = (stop - i) / kLanes;
    for (int b = 0; b < blocks; ++b, pr += kLanes, pi += kLanes) {
#pragma omp simd
      for (int j = 0; j < kLanes; ++j) {
        pr[j] += er[j];
        pi[j] += ei[j];
        const double ner = er[j] * sr[j] - ei[j] * si[j];
        ei[j] = er[j] * si[j] + ei[j] * sr[j];
        er[j] = ner;
        const double nsr = sr[j] * kr - si[j] * ki;
        si[j] = sr[j] * ki + si[j] * kr;
        sr[j] = nsr;
      }
    }
    const int tail = (stop - i) - blocks * kLanes;
    for (int j = 0; j < tail; ++j) {
      pr[j] += er[j];
      pi[j] += ei[j];
    }
    i = stop;
  }
}

}  // namespace

void field_grid_omp(const FanSnapshot& snap, const KernelParams& kp, const PointGrid& g, cplx* out) {
  const int n = g.n;
  std::vector<Item> items;
  for (int r = 0; r < g.row_count(); ++r) {
    const auto [b, e] = g.rows[r];
    for (int i0 = b; i0 < e; i0 += kSegment)
      items.push_back({r, i0, std::min(i0 + kSegment, e), g.offsets[r] + static_cast<std::size_t>(i0 - b)});
  }

  const bool fast = kp.ord.is_zero() && !kp.cutoff.finite();
  const double eps = kp.epsilon;
  const cplx iz(0.0, 1.0 / eps);
  const double lo0 = g.lo(0), h = g.h(0);
  const double lim = 2.0 * kp.truncation * eps;
  const double eta = kp.cutoff.eta;
  const int nitems = static_cast<int>(items.size());

  // Per-beam data shared by all rows.
  const std::size_t nb = snap.beams.size();
  std::vector<Vec> halfw(nb);
  std::vector<cplx> kstep(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    halfw[b] = ellipse_halfwidths(snap.beams[b].s.M, lim);
    kstep[b] = std::exp(iz * snap.beams[b].s.M(0, 0) * h * h);
  }

#pragma omp parallel for schedule(dynamic, 4)
  for (int it = 0; it < nitems; ++it) {
    const Item& item = items[it];
    const int len = item.i1 - item.i0;
    std::array<double, kSegment> re{}, im{};
    std::vector<cplx> slow;
    if (!fast) slow.assign(len, cplx(0.0));
    const Vec x = g.row_coords(item.row);
    Vec d(n);

    for (std::size_t bi = 0; bi < nb; ++bi) {
      const FrozenBeam& fb = snap.beams[bi];
      const BeamState& s = fb.s;
      bool outside = false;
      for (int k = 1; k < n; ++k) outside |= std::abs(x(k) - s.q(k)) > halfw[bi](k);
      if (outside) continue;

      // Restrict to axis 0: Im Phi and Phi are quadratics in d0.
      const double A = s.M(0, 0).imag();
      double bq = 0.0, c0 = 0.0, e2 = 0.0;
      cplx a1 = s.p(0), a0 = s.phi0;
      const cplx a2 = s.M(0, 0);
      for (int k = 1; k < n; ++k) {
        const double ek = x(k) - s.q(k);
        d(k) = ek;
        e2 += ek * ek;
        bq += s.M(0, k).imag() * ek;
        a1 += s.M(0, k) * ek;
        a0 += s.p(k) * ek;
        for (int l = 1; l < n; ++l) {
          const double el = x(l) - s.q(l);
          c0 += ek * s.M(k, l).imag() * el;
          a0 += 0.5 * ek * s.M(k, l) * el;
        }
      }
      const double disc = bq * bq - A * (c0 - lim);
      if (disc < 0.0) continue;
      const double sq = std::sqrt(disc);
      double dlo = (-bq - sq) / A, dhi = (-bq + sq) / A;
      if (kp.cutoff.finite()) {
        const double rem = 4.0 * eta * eta - e2;
        if (rem <= 0.0) continue;
        const double rr = std::sqrt(rem);
        dlo = std::max(dlo, -rr);
        dhi = std::min(dhi, rr);
      }
      const double flo = std::ceil((s.q(0) + dlo - lo0) / h);
      const double fhi = std::floor((s.q(0) + dhi - lo0) / h) + 1.0;
      const int ia = static_cast<int>(std::max<double>(item.i0, flo));
      const int ib = static_cast<int>(std::min<double>(item.i1, fhi));
      if (ia >= ib) continue;

      const double scale = kp.prefactor * fb.w;
      if (fast) {
        accumulate_fast(ia, ib, item.i0, lo0, h, s.q(0), scale * s.a00, iz, a0, a1, a2, kstep[bi], re.data(),
                        im.data());
        continue;
      }
      const cplx K = kstep[bi];
      int i = ia;
      while (i < ib) {
        const int stop = std::min(ib, i + kReseed);
        const double d0 = lo0 + i * h - s.q(0);
        cplx E = std::exp(iz * (a0 + d0 * (a1 + 0.5 * a2 * d0)));
        cplx R = std::exp(iz * (a1 * h + a2 * (d0 * h + 0.5 * h * h)));
        for (; i < stop; ++i) {
          d(0) = lo0 + i * h - s.q(0);
          slow[i - item.i0] += mul(scale * beam_multiplier(fb, kp.ord, d, eps, kp.cutoff), E);
          E = mul(E, R);
          R = mul(R, K);
        }
      }
    }

    cplx* o = out + item.offset;
    if (fast) {
      for (int i = 0; i < len; ++i) o[i] = cplx(re[i], im[i]);
    } else {
      std::copy(slow.begin(), slow.end(), o);
    }
  }
}

}  // namespace gbq::kernel
