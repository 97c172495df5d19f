#include "gbq/field.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "gbq/csv.hpp"
#include "gbq/errors.hpp"
#include "gbq/field_kernel.hpp"

namespace gbq {

namespace {
constexpr cplx I1(0.0, 1.0);
}

double smooth_transition(double s) {
  if (s <= 0.0) return 1.0;
  if (s >= 1.0) return 0.0;
  const double f = (2 * s - 1) / (s * (1 - s));
  return 1.0 / (1.0 + std::exp(f));
}

void smooth_transition_derivs(double s, double& b, double& db, double& d2b) {
  if (s <= 0.0 || s >= 1.0) {
    b = s <= 0.0 ? 1.0 : 0.0;
    db = d2b = 0.0;
    return;
  }
  const double D = s * (1 - s);
  const double f = (2 * s - 1) / D;
  const double N = 2 * s * s - 2 * s + 1;
  const double f1 = N / (D * D);
  const double dD = 1 - 2 * s;
  const double f2 = ((4 * s - 2) * D * D - N * 2 * D * dD) / (D * D * D * D);
  b = 1.0 / (1.0 + std::exp(f));
  const double nb = 1.0 / (1.0 + std::exp(-f));  // 1 - B without cancellation
  const double bb = b * nb;
  db = -bb * f1;
  d2b = -db * (nb - b) * f1 - bb * f2;
}

bool CutoffSpec::finite() const { return std::isfinite(eta); }

double CutoffSpec::profile(const Vec& x) const {
  if (!finite()) return 1.0;
  return smooth_transition((x.norm() - eta) / eta);
}

void CutoffSpec::derivs(const Vec& d, double& rho, Vec& grad, Mat& hess) const {
  const auto n = d.size();
  grad = Vec::Zero(n);
  hess = Mat::Zero(n, n);
  rho = 1.0;
  if (!finite()) return;
  const double r = d.norm();
  if (r <= eta) return;
  if (r >= 2 * eta) {
    rho = 0.0;
    return;
  }
  double b, db, d2b;
  smooth_transition_derivs((r - eta) / eta, b, db, d2b);
  rho = b;
  const Vec u = d / r;
  grad = (db / eta) * u;
  hess = (d2b / (eta * eta)) * u * u.transpose() +
         (db / eta) * (Mat::Identity(n, n) - u * u.transpose()) / r;
}

double FieldSpec::prefactor() const {
  const int n = fan ? fan->n : 1;
  return std::pow(2.0 * std::numbers::pi * epsilon, -0.5 * n);
}

void FieldSpec::validate() const {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    std::ostringstream os;
    os << "epsilon=" << epsilon << " outside (0, 1]";
    throw std::invalid_argument(os.str());
  }
  if (!fan || !scenario) throw std::invalid_argument("field spec without fan or scenario");
  for (Mode m : modes) {
    if (!fan->has(m))
      throw std::invalid_argument(std::string("mode ") + to_string(m) + " not present in fan");
  }
  if (cutoff.finite() && !(cutoff.eta > 0.0)) throw std::invalid_argument("cutoff eta must be positive");
}

FieldSpec make_field_spec(std::shared_ptr<const ScenarioPreset> s, std::shared_ptr<const BeamFan> fan,
                          double epsilon, std::vector<Mode> modes, CutoffSpec cutoff) {
  FieldSpec fs;
  fs.scenario = std::move(s);
  fs.fan = std::move(fan);
  fs.epsilon = epsilon;
  fs.modes = modes.empty() && fs.fan ? fs.fan->modes : std::move(modes);
  fs.cutoff = cutoff;
  fs.validate();
  return fs;
}

cplx eval_phase(const BeamState& s, const Vec& x) {
  const Vec d = x - s.q;
  const CVec dc = d.cast<cplx>();
  return s.phi0 + d.dot(s.p) + 0.5 * (dc.transpose() * s.M * dc)(0, 0);
}

cplx eval_beam(const BeamState& s, const Vec& x, double epsilon, const CutoffSpec& cutoff) {
  const double rho = cutoff.profile(x - s.q);
  if (rho == 0.0) return 0.0;
  return s.a00 * rho * std::exp(I1 * eval_phase(s, x) / epsilon);
}

FanSnapshot freeze(const FieldSpec& fs, double t, bool with_rates) {
  FanSnapshot snap;
  snap.t = t;
  snap.n = fs.fan->n;
  const auto& fan = *fs.fan;
  std::size_t total = 0;
  for (Mode m : fs.modes) total += fan.trajectories(m).size();
  snap.beams.resize(total);
  std::size_t k = 0;
  for (Mode m : fs.modes) {
    const auto& trs = fan.trajectories(m);
    for (std::size_t j = 0; j < trs.size(); ++j, ++k) {
      FrozenBeam& b = snap.beams[k];
      b.s = trs[j].state_at(t);
      b.w = fan.weights[j];
      if (with_rates) b.r = ode_rhs(b.s, fs.scenario->medium, fan.y);
    }
  }
  return snap;
}

void check_order(const DerivativeOrder& ord, int n) {
  if (ord.p < 0) throw UnsupportedOrder("negative time order");
  for (int k = 0; k < kMaxDim; ++k) {
    if (ord.alpha[k] < 0) throw UnsupportedOrder("negative spatial order");
    if (k >= n && ord.alpha[k] != 0) throw UnsupportedOrder("spatial order on a missing axis");
  }
  if (ord.spatial_order() > 2) {
    std::ostringstream os;
    os << "|alpha|=" << ord.spatial_order() << " exceeds 2";
    throw UnsupportedOrder(os.str());
  }
}

cplx beam_multiplier(const FrozenBeam& b, const DerivativeOrder& ord, const Vec& d, double epsilon,
                     const CutoffSpec& cutoff) {
  const auto& s = b.s;
  double rho;
  Vec grho;
  Mat hrho;
  cutoff.derivs(d, rho, grho, hrho);
  const CVec dc = d.cast<cplx>();

  if (ord.p == 1) {
    const auto& r = b.r;
    const cplx dtphi = r.phi0 - r.q.dot(s.p) + (dc.transpose() * (r.p.cast<cplx>() - s.M * r.q.cast<cplx>()))(0, 0) +
                       0.5 * (dc.transpose() * r.M * dc)(0, 0);
    const double dtrho = -grho.dot(r.q);
    return epsilon * r.a00 * rho + epsilon * s.a00 * dtrho + s.a00 * rho * I1 * dtphi;
  }

  const int order = ord.spatial_order();
  if (order == 0) return s.a00 * rho;
  const CVec G = s.p.cast<cplx>() + s.M * dc;
  int k = -1, l = -1;
  for (int ax = 0; ax < kMaxDim; ++ax) {
    for (int m = 0; m < ord.alpha[ax]; ++m) (k < 0 ? k : l) = ax;
  }
  if (order == 1) return epsilon * s.a00 * grho(k) + s.a00 * rho * I1 * G(k);
  return epsilon * epsilon * s.a00 * hrho(k, l) +
         epsilon * s.a00 * I1 * (grho(k) * G(l) + grho(l) * G(k)) +
         s.a00 * rho * (-G(k) * G(l) + I1 * epsilon * s.M(k, l));
}

namespace {

cplx sum_beams(const FieldSpec& fs, const FanSnapshot& snap, const DerivativeOrder& ord, const Vec& x) {
  cplx acc = 0.0;
  const double eps = fs.epsilon;
  for (const auto& b : snap.beams) {
    const Vec d = x - b.s.q;
    if (fs.cutoff.finite() && d.norm() >= 2 * fs.cutoff.eta) continue;
    const cplx phi = eval_phase(b.s, x);
    if (phi.imag() / eps > fs.truncation) continue;
    acc += b.w * beam_multiplier(b, ord, d, eps, fs.cutoff) * std::exp(I1 * phi / eps);
  }
  return fs.prefactor() * acc;
}

}  // namespace

cplx eval_field(const FieldSpec& fs, const FanSnapshot& snap, const Vec& x) {
  return sum_beams(fs, snap, DerivativeOrder{}, x);
}

cplx eval_field(const FieldSpec& fs, double t, const Vec& x) {
  return eval_field(fs, freeze(fs, t, false), x);
}

cplx eval_scaled_derivative(const FieldSpec& fs, const DerivativeOrder& ord, double t, const Vec& x) {
  check_order(ord, fs.fan->n);
  if (ord.analytic()) return sum_beams(fs, freeze(fs, t, ord.p > 0), ord, x);
  DerivativeOrder lower = ord;
  lower.p -= 1;
  const double h = fs.fd_step();
  return fs.epsilon * (eval_scaled_derivative(fs, lower, t + h, x) - eval_scaled_derivative(fs, lower, t - h, x)) /
         (2 * h);
}

void write_field_snapshot(std::ostream& os, const FieldSpec& fs, double t, const Box& box,
                          const std::vector<int>& counts) {
  const int n = fs.fan->n;
  if (static_cast<int>(counts.size()) != n) throw std::invalid_argument("snapshot counts must match dimension");
  std::array<int, kMaxDim> c{1, 1, 1};
  Vec h(n);
  for (int k = 0; k < n; ++k) {
    if (counts[k] < 2) throw std::invalid_argument("snapshot needs at least 2 points per axis");
    c[k] = counts[k];
    h(k) = (box.hi(k) - box.lo(k)) / (counts[k] - 1);
  }
  const PointGrid g = PointGrid::full(box.lo, h, c);
  std::vector<cplx> u;
  field_on_grid(fs, DerivativeOrder{}, t, g, u);

  CsvWriter w(os);
  std::vector<std::string> header;
  for (int k = 0; k < n; ++k) header.push_back("x" + std::to_string(k + 1));
  for (const char* col : {"re_u", "im_u", "abs_u"}) header.emplace_back(col);
  w.header(header);
  std::size_t idx = 0;
  for (int r = 0; r < g.row_count(); ++r) {
    for (int i = g.rows[r].first; i < g.rows[r].second; ++i, ++idx) {
      const Vec x = g.point(r, i);
      std::vector<double> row(x.data(), x.data() + n);
      row.push_back(u[idx].real());
      row.push_back(u[idx].imag());
      row.push_back(std::abs(u[idx]));
      w.row(row);
    }
  }
}

}  // namespace gbq
