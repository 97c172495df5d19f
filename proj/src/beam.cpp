#include "gbq/beam.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <ostream>
#include <sstream>

#include "gbq/errors.hpp"

namespace gbq {

namespace {

constexpr double kMinSlowness = 1e-12;

// Packed layout: phi0 | q (n) | p (n) | Re M (n*n) | Im M (n*n) | Re a | Im a
constexpr int kMaxPacked = 1 + 2 * kMaxDim + 2 * kMaxDim * kMaxDim + 2;
using Packed = std::array<double, kMaxPacked>;

struct Layout {
  int n, q, p, mr, mi, a, size;
  explicit Layout(int n_)
      : n(n_), q(1), p(1 + n_), mr(1 + 2 * n_), mi(1 + 2 * n_ + n_ * n_), a(1 + 2 * n_ + 2 * n_ * n_),
        size(3 + 2 * n_ + 2 * n_ * n_) {}
};

void pack(const BeamState& s, const Layout& L, double* v) {
  const int n = L.n;
  v[0] = s.phi0;
  for (int i = 0; i < n; ++i) {
    v[L.q + i] = s.q(i);
    v[L.p + i] = s.p(i);
    for (int j = 0; j < n; ++j) {
      v[L.mr + i * n + j] = s.M(i, j).real();
      v[L.mi + i * n + j] = s.M(i, j).imag();
    }
  }
  v[L.a] = s.a00.real();
  v[L.a + 1] = s.a00.imag();
}

BeamState unpack(const double* v, const Layout& L, double t, Mode mode) {
  const int n = L.n;
  BeamState s;
  s.t = t;
  s.mode = mode;
  s.phi0 = v[0];
  s.q.resize(n);
  s.p.resize(n);
  s.M.resize(n, n);
  for (int i = 0; i < n; ++i) {
    s.q(i) = v[L.q + i];
    s.p(i) = v[L.p + i];
    for (int j = 0; j < n; ++j) s.M(i, j) = cplx(v[L.mr + i * n + j], v[L.mi + i * n + j]);
  }
  s.a00 = cplx(v[L.a], v[L.a + 1]);
  return s;
}

// out = A * B for n x n row-major blocks.
template <int n>
inline void matmul(const double* A, const double* B, double* out) {
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += A[i * n + k] * B[k * n + j];
      out[i * n + j] = acc;
    }
}

// Right-hand side on packed storage, real and imaginary parts kept apart.
template <int n>
void rhs_fixed(double sg, const double* v, const MediumModel& m, const Vec& y, double* out) {
  constexpr int nn = n * n;
  constexpr int iq = 1, ip = 1 + n, imr = 1 + 2 * n, imi = 1 + 2 * n + nn, ia = 1 + 2 * n + 2 * nn;
  Vec q(n), p(n);
  double np2 = 0.0;
  for (int i = 0; i < n; ++i) {
    q(i) = v[iq + i];
    p(i) = v[ip + i];
    np2 += p(i) * p(i);
  }
  const double np = std::sqrt(np2);
  if (np < kMinSlowness) {
    std::ostringstream os;
    os << "|p| = " << np << " at q=(" << q.transpose() << ")";
    throw DegenerateSlowness(os.str());
  }
  const double c = m.eval(q, y);
  const Vec gcv = m.grad_x(q, y);
  const Mat Hc = m.hess_x(q, y);
  double gc[n];
  for (int i = 0; i < n; ++i) gc[i] = gcv(i);

  double B[nn], Bt[nn], C[nn];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      B[i * n + j] = p(i) * gc[j] / np;
      Bt[j * n + i] = B[i * n + j];
      C[i * n + j] = (i == j ? c / np : 0.0) - c / (np2 * np) * p(i) * p(j);
    }
  const double* Mr = v + imr;
  const double* Mi = v + imi;

  // M C M = (Mr C Mr - Mi C Mi) + i (Mr C Mi + Mi C Mr)
  double CMr[nn], CMi[nn], t1[nn], t2[nn], t3[nn], t4[nn];
  double BtMr[nn], BtMi[nn], MrB[nn], MiB[nn];
  matmul<n>(C, Mr, CMr);
  matmul<n>(C, Mi, CMi);
  matmul<n>(Bt, Mr, BtMr);
  matmul<n>(Bt, Mi, BtMi);
  matmul<n>(Mr, B, MrB);
  matmul<n>(Mi, B, MiB);
  matmul<n>(Mr, CMr, t1);
  matmul<n>(Mi, CMi, t2);
  matmul<n>(Mr, CMi, t3);
  matmul<n>(Mi, CMr, t4);

  out[0] = 0.0;
  for (int i = 0; i < n; ++i) {
    out[iq + i] = sg * c * p(i) / np;
    out[ip + i] = -sg * gc[i] * np;
  }
  for (int k = 0; k < nn; ++k) {
    out[imr + k] = -sg * (np * Hc(k / n, k % n) + BtMr[k] + MrB[k] + t1[k] - t2[k]);
    out[imi + k] = -sg * (BtMi[k] + MiB[k] + t3[k] + t4[k]);
  }

  double trr = 0.0, tri = 0.0, pmr = 0.0, pmi = 0.0, gp = 0.0;
  for (int i = 0; i < n; ++i) {
    trr += Mr[i * n + i];
    tri += Mi[i * n + i];
    gp += gc[i] * p(i);
    for (int j = 0; j < n; ++j) {
      pmr += p(i) * Mr[i * n + j] * p(j);
      pmi += p(i) * Mi[i * n + j] * p(j);
    }
  }
  const double f = sg / (2.0 * np);
  const double kr = f * (-c * trr + gp + c * pmr / np2);
  const double ki = f * (-c * tri + c * pmi / np2);
  const double ar = v[ia], ai = v[ia + 1];
  out[ia] = kr * ar - ki * ai;
  out[ia + 1] = kr * ai + ki * ar;
}

void rhs_packed(const Layout& L, double sg, const double* v, const MediumModel& m, const Vec& y, double* out) {
  switch (L.n) {
    case 1: return rhs_fixed<1>(sg, v, m, y, out);
    case 2: return rhs_fixed<2>(sg, v, m, y, out);
    case 3: return rhs_fixed<3>(sg, v, m, y, out);
  }
  throw std::invalid_argument("spatial dimension must be 1, 2 or 3");
}

double min_eig_sym(int n, const double* S) {
  if (n == 1) return S[0];
  if (n == 2) {
    const double a = S[0], b = 0.5 * (S[1] + S[2]), d = S[3];
    return 0.5 * (a + d) - std::hypot(0.5 * (a - d), b);
  }
  Mat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = 0.5 * (S[i * n + j] + S[j * n + i]);
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

double min_imag_eigenvalue(const CMat& M) {
  const int n = static_cast<int>(M.rows());
  double S[9];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) S[i * n + j] = M(i, j).imag();
  return min_eig_sym(n, S);
}

BeamRates ode_rhs(const BeamState& s, const MediumModel& m, const Vec& y) {
  const Layout L(static_cast<int>(s.q.size()));
  Packed v{}, out{};
  pack(s, L, v.data());
  try {
    rhs_packed(L, sign(s.mode), v.data(), m, y, out.data());
  } catch (const DegenerateSlowness& e) {
    std::ostringstream os;
    os << e.what() << ", t=" << s.t;
    throw DegenerateSlowness(os.str());
  }
  const BeamState d = unpack(out.data(), L, s.t, s.mode);
  BeamRates r;
  r.phi0 = d.phi0;
  r.q = d.q;
  r.p = d.p;
  r.M = d.M;
  r.a00 = d.a00;
  return r;
}

BeamState init_beam(const Vec& z, const Vec& y, const InitialWaveData& data,
                    const MediumModel& m, Mode mode) {
  const Vec g = data.grad_phi0(z, y);
  const double gn = g.norm();
  if (gn <= kMinSlowness) {
    std::ostringstream os;
    os << "|grad phi0| = " << gn << " at z=(" << z.transpose() << ")";
    throw StationaryPhasePoint(os.str());
  }
  const auto n = z.size();
  BeamState s;
  s.t = 0.0;
  s.mode = mode;
  s.q = z;
  s.p = g;
  s.phi0 = data.phi0(z, y);
  s.M = data.hess_phi0(z, y).cast<cplx>() + cplx(0.0, 1.0) * CMat::Identity(n, n);
  const double c = m.eval(z, y);
  s.a00 = 0.5 * (data.B0(z, y) + sign(mode) * data.B1(z, y) / (cplx(0.0, 1.0) * c * gn));
  return s;
}

BeamState BeamTrajectory::sample(std::size_t k) const {
  return unpack(states_.data() + k * stride_, Layout(n_), times_.at(k), mode);
}

BeamState BeamTrajectory::state_at(double t) const {
  if (times_.empty()) throw std::logic_error("state_at on empty trajectory");
  const double tol = 1e-12 * std::max(1.0, t_end());
  if (t < times_.front() - tol || t > times_.back() + tol) {
    std::ostringstream os;
    os << "t=" << t << " outside trajectory range [0, " << t_end() << "]";
    throw std::out_of_range(os.str());
  }
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  std::size_t k = it == times_.begin() ? 0 : static_cast<std::size_t>(it - times_.begin()) - 1;
  if (k + 1 >= times_.size()) return sample(times_.size() - 1);
  if (t == times_[k]) return sample(k);

  const double h = times_[k + 1] - times_[k];
  const double th = (t - times_[k]) / h;
  const double th2 = th * th, th3 = th2 * th;
  const double h00 = 2 * th3 - 3 * th2 + 1;
  const double h10 = (th3 - 2 * th2 + th) * h;
  const double h01 = -2 * th3 + 3 * th2;
  const double h11 = (th3 - th2) * h;
  const double* y0 = states_.data() + k * stride_;
  const double* y1 = y0 + stride_;
  const double* f0 = rates_.data() + k * stride_;
  const double* f1 = f0 + stride_;
  Packed v{};
  for (int i = 0; i < stride_; ++i) v[i] = h00 * y0[i] + h10 * f0[i] + h01 * y1[i] + h11 * f1[i];
  return unpack(v.data(), Layout(n_), t, mode);
}

void BeamTrajectory::write_csv(std::ostream& os) const {
  const int n = n_;
  os << "t";
  for (int i = 0; i < n; ++i) os << ",q" << i;
  for (int i = 0; i < n; ++i) os << ",p" << i;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) os << ",ReM" << i << j << ",ImM" << i << j;
  os << ",Re_a00,Im_a00,H_drift\n";
  os.precision(17);
  for (std::size_t k = 0; k < times_.size(); ++k) {
    const BeamState s = sample(k);
    os << s.t;
    for (int i = 0; i < n; ++i) os << ',' << s.q(i);
    for (int i = 0; i < n; ++i) os << ',' << s.p(i);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) os << ',' << s.M(i, j).real() << ',' << s.M(i, j).imag();
    os << ',' << s.a00.real() << ',' << s.a00.imag() << ',' << drift_[k] << '\n';
  }
}

BeamTrajectory propagate(const Vec& z, const Vec& y, const InitialWaveData& data,
                         const MediumModel& m, Mode mode, double T,
                         const StepControl& ctl) {
  if (!(T > 0.0)) throw std::invalid_argument("propagate: T must be positive");
  const int n = static_cast<int>(z.size());
  const Layout L(n);
  const int N = L.size;
  const double sg = sign(mode);

  BeamTrajectory tr;
  tr.mode = mode;
  tr.z = z;
  tr.y = y;
  tr.n_ = n;
  tr.stride_ = N;

  const BeamState s0 = init_beam(z, y, data, m, mode);
  tr.H0 = m.eval(z, y) * s0.p.norm();

  double t = 0.0;
  auto f = [&](const Packed& v, Packed& out) {
    try {
      rhs_packed(L, sg, v.data(), m, y, out.data());
    } catch (const DegenerateSlowness& e) {
      std::ostringstream os;
      os << e.what() << ", t=" << t;
      throw DegenerateSlowness(os.str());
    }
  };

  auto check_and_symmetrize = [&](Packed& v, double at) {
    double asym = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        for (int off : {L.mr, L.mi}) asym = std::max(asym, std::abs(v[off + i * n + j] - v[off + j * n + i]));
    tr.max_asym_ = std::max(tr.max_asym_, asym);
    if (asym > ctl.symmetry_tol) {
      std::ostringstream os;
      os << "M asymmetry " << asym << " at t=" << at << " exceeds " << ctl.symmetry_tol;
      throw InvariantBreach(os.str());
    }
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        for (int off : {L.mr, L.mi}) {
          const double avg = 0.5 * (v[off + i * n + j] + v[off + j * n + i]);
          v[off + i * n + j] = v[off + j * n + i] = avg;
        }
    const double lam = min_eig_sym(n, v.data() + L.mi);
    tr.min_imag_eig_ = std::min(tr.min_imag_eig_, lam);
    if (!(lam > 0.0)) {
      std::ostringstream os;
      os << "Im M lost positivity (lambda_min=" << lam << ") at t=" << at;
      throw InvariantBreach(os.str());
    }
  };

  auto drift = [&](const Packed& v) {
    Vec q(n), p(n);
    for (int i = 0; i < n; ++i) {
      q(i) = v[L.q + i];
      p(i) = v[L.p + i];
    }
    return std::abs(m.eval(q, y) * p.norm() - tr.H0) / tr.H0;
  };

  auto store = [&](double at, const Packed& v, const Packed& k, double d) {
    tr.times_.push_back(at);
    tr.states_.insert(tr.states_.end(), v.begin(), v.begin() + N);
    tr.rates_.insert(tr.rates_.end(), k.begin(), k.begin() + N);
    tr.drift_.push_back(d);
  };

  const std::size_t expected = static_cast<std::size_t>(std::ceil(T / ctl.h_max)) + 2;
  tr.times_.reserve(expected);
  tr.states_.reserve(expected * N);
  tr.rates_.reserve(expected * N);
  tr.drift_.reserve(expected);

  Packed v{}, k1{}, k2{}, k3{}, k4{}, k5{}, k6{}, k7{}, tmp{}, vn{};
  pack(s0, L, v.data());
  check_and_symmetrize(v, 0.0);
  f(v, k1);
  store(0.0, v, k1, 0.0);

  double h = std::min(ctl.h_max, T);
  long steps = 0;
  while (t < T) {
    if (++steps > ctl.max_steps) throw IntegratorFailure("step budget exhausted");
    const bool last = t + h >= T * (1.0 - 1e-14);
    if (last) h = T - t;

    for (int i = 0; i < N; ++i) tmp[i] = v[i] + h * a21 * k1[i];
    f(tmp, k2);
    for (int i = 0; i < N; ++i) tmp[i] = v[i] + h * (a31 * k1[i] + a32 * k2[i]);
    f(tmp, k3);
    for (int i = 0; i < N; ++i) tmp[i] = v[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    f(tmp, k4);
    for (int i = 0; i < N; ++i) tmp[i] = v[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    f(tmp, k5);
    for (int i = 0; i < N; ++i)
      tmp[i] = v[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    f(tmp, k6);
    for (int i = 0; i < N; ++i) vn[i] = v[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    f(vn, k7);

    double en = 0.0;
    for (int i = 0; i < N; ++i) {
      const double err = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = ctl.atol + ctl.rtol * std::max(std::abs(v[i]), std::abs(vn[i]));
      en = std::max(en, std::abs(err) / sc);
    }

    if (en <= 1.0) {
      t = last ? T : t + h;
      check_and_symmetrize(vn, t);
      v = vn;
      f(v, k1);  // re-evaluated after symmetrization
      const double d = drift(v);
      tr.max_h_drift_ = std::max(tr.max_h_drift_, d);
      store(t, v, k1, d);
      if (last) break;
      const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      h = std::min(ctl.h_max, h * fac);
    } else {
      h *= std::clamp(0.9 * std::pow(en, -0.2), 0.1, 0.9);
      if (h < ctl.h_min) {
        std::ostringstream os;
        os << "step size underflow at t=" << t;
        throw IntegratorFailure(os.str());
      }
    }
  }
  return tr;
}

bool BeamFan::has(Mode m) const {
  return std::find(modes.begin(), modes.end(), m) != modes.end();
}

namespace {

template <class E>
bool rethrow_as(const Error& e, const std::string& suffix) {
  if (dynamic_cast<const E*>(&e)) throw E(e.what() + suffix);
  return false;
}

// Same error type, message extended with the failing launch point.
[[noreturn]] void rethrow_annotated(std::exception_ptr p, const std::string& suffix) {
  try {
    std::rethrow_exception(p);
  } catch (const Error& e) {
    rethrow_as<StationaryPhasePoint>(e, suffix) || rethrow_as<DegenerateSlowness>(e, suffix) ||
        rethrow_as<IntegratorFailure>(e, suffix) || rethrow_as<InvariantBreach>(e, suffix);
    throw Error(e.kind(), e.what() + suffix);
  }
}

}  // namespace

BeamFan build_fan(const ScenarioPreset& s, const Vec& y, double T, double z_spacing,
                  const std::vector<Mode>& modes, const StepControl& control) {
  if (!(z_spacing > 0.0)) throw std::invalid_argument("build_fan: z_spacing must be positive");
  BeamFan fan;
  fan.y = y;
  fan.modes = modes;
  fan.T = T;
  fan.n = s.n;
  fan.grid = make_launch_grid(s.data.support, z_spacing);
  for (int j : active_launch_points(s, fan.grid)) {
    fan.z.push_back(fan.grid.points[j]);
    fan.weights.push_back(fan.grid.weights[j]);
  }

  const int nz = static_cast<int>(fan.z.size());
  const bool want_plus = fan.has(Mode::plus);
  const bool want_minus = fan.has(Mode::minus);
  if (want_plus) fan.plus.resize(nz);
  if (want_minus) fan.minus.resize(nz);

  std::exception_ptr failure;
  int failed_at = -1;
  const int jobs = 2 * nz;
#pragma omp parallel for schedule(dynamic, 8)
  for (int job = 0; job < jobs; ++job) {
    const int j = job / 2;
    const Mode mode = job % 2 == 0 ? Mode::plus : Mode::minus;
    if ((mode == Mode::plus && !want_plus) || (mode == Mode::minus && !want_minus)) continue;
    try {
      auto tr = propagate(fan.z[j], y, s.data, s.medium, mode, T, control);
      (mode == Mode::plus ? fan.plus : fan.minus)[j] = std::move(tr);
    } catch (...) {
#pragma omp critical(gbq_fan_failure)
      if (!failure || job < failed_at) {
        failure = std::current_exception();
        failed_at = job;
      }
    }
  }
  if (failure) {
    std::ostringstream where;
    where << " [launch point z=(" << fan.z[failed_at / 2].transpose() << "), mode "
          << (failed_at % 2 == 0 ? "+" : "-") << "]";
    rethrow_annotated(failure, where.str());
  }
  return fan;
}

}  // namespace gbq
