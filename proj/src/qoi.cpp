#include "gbq/qoi.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gbq/errors.hpp"

namespace gbq {

const char* to_string(QoIKind k) {
  switch (k) {
    case QoIKind::space: return "space";
    case QoIKind::spacetime: return "spacetime";
    case QoIKind::energy: return "energy";
    case QoIKind::arias: return "arias";
  }
  return "?";
}

QoIKind qoi_kind_from_string(const std::string& s) {
  for (QoIKind k : {QoIKind::space, QoIKind::spacetime, QoIKind::energy, QoIKind::arias})
    if (s == to_string(k)) return k;
  throw std::invalid_argument("unknown QoI kind '" + s + "'");
}

double QoISpec::space_step(double eps) const {
  if (h_x > 0) return h_x;
  return h_x_eps > 0 ? h_x_eps * eps : eps / resolution;
}

double QoISpec::time_step(double eps) const {
  if (h_t > 0) return h_t;
  return h_t_eps > 0 ? h_t_eps * eps : eps / resolution;
}

namespace {

struct AxisRule {
  double lo = 0.0;
  double h = 0.0;
  std::vector<double> w;
};

// Nodes a + i h covering [a, b] with spacing <= h_max; `pad` extends the
// interval by one h_max on both sides.
AxisRule axis_rule(double a, double b, double h_max, QuadratureRule rule, bool pad) {
  if (pad) {
    a -= h_max;
    b += h_max;
  }
  const double len = b - a;
  int intervals = std::max(1, static_cast<int>(std::ceil(len / h_max - 1e-9)));
  if (rule == QuadratureRule::simpson && intervals % 2) ++intervals;
  AxisRule r;
  r.lo = a;
  r.h = len / intervals;
  r.w.assign(intervals + 1, r.h);
  if (rule == QuadratureRule::trapezoid) {
    r.w.front() = r.w.back() = 0.5 * r.h;
  } else {
    for (int i = 0; i <= intervals; ++i)
      r.w[i] = r.h / 3.0 * (i == 0 || i == intervals ? 1.0 : (i % 2 ? 4.0 : 2.0));
  }
  return r;
}

struct SpaceRule {
  PointGrid grid;
  std::vector<double> weight;  // quadrature weight * g * psi, packed like the grid
};

SpaceRule space_rule(const ScenarioPreset& sc, const WindowFunction& win, const WeightFunction& g, double t,
                     const Vec& y, double h, QuadratureRule rule) {
  const int n = sc.n;
  std::array<AxisRule, kMaxDim> ax;
  SpaceRule out;
  PointGrid& grid = out.grid;
  grid.n = n;
  grid.lo = Vec(n);
  grid.h = Vec(n);
  for (int k = 0; k < n; ++k) {
    ax[k] = axis_rule(win.support.lo(k), win.support.hi(k), h, rule, true);
    grid.lo(k) = ax[k].lo;
    grid.h(k) = ax[k].h;
    grid.counts[k] = static_cast<int>(ax[k].w.size());
  }
  const int rows = grid.row_count();
  grid.rows.assign(rows, {0, 0});
  std::vector<std::vector<double>> row_w(rows);
  for (int r = 0; r < rows; ++r) {
    double wr = 1.0;
    if (n >= 2) wr *= ax[1].w[r % grid.counts[1]];
    if (n >= 3) wr *= ax[2].w[r / grid.counts[1]];
    std::vector<double> vals(grid.counts[0]);
    int first = -1, last = -1;
    Vec x = grid.row_coords(r);
    for (int i = 0; i < grid.counts[0]; ++i) {
      x(0) = grid.lo(0) + i * grid.h(0);
      const double psi = win.psi(t, x);
      const double v = psi == 0.0 ? 0.0 : wr * ax[0].w[i] * psi * (g ? g(t, x, y) : sc.g(t, x, y));
      vals[i] = v;
      if (v != 0.0) {
        if (first < 0) first = i;
        last = i;
      }
    }
    if (first >= 0) {
      grid.rows[r] = {first, last + 1};
      row_w[r].assign(vals.begin() + first, vals.begin() + last + 1);
    }
  }
  grid.finalize();
  out.weight.reserve(grid.size());
  for (auto& rw : row_w) out.weight.insert(out.weight.end(), rw.begin(), rw.end());
  return out;
}

double integrate(const std::vector<double>& w, const std::vector<cplx>& v) {
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * std::norm(v[i]);
  return acc;
}

cplx integrate_cross(const std::vector<double>& w, const std::vector<cplx>& a, const std::vector<cplx>& b) {
  cplx acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * a[i] * std::conj(b[i]);
  return acc;
}

void check_resolution(const char* axis, double h, double eps, double resolution) {
  if (h > eps / resolution * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << axis << "=" << h << " exceeds epsilon/" << resolution << "=" << eps / resolution;
    throw GridTooCoarse(os.str());
  }
}

const WindowFunction& window_for(const FieldSpec& fs, const QoISpec& spec) {
  if (spec.window) return *spec.window;
  return spec.kind == QoIKind::space ? fs.scenario->window : fs.scenario->window_spacetime;
}

void check_parameter(const FieldSpec& fs, const Vec& y) {
  if (y.size() != fs.fan->y.size() || (y - fs.fan->y).cwiseAbs().maxCoeff() > 1e-14)
    throw std::invalid_argument("field spec was built for a different parameter value");
}

std::string normalization(const DerivativeOrder& ord) {
  std::ostringstream os;
  os << "eps^" << 2 * ord.total() << " absorbed as (eps^" << ord.total() << " d)^2";
  return os.str();
}

// Space integral at every node of the time rule (a single node for space kind).
template <class Slice>
void over_time(const WindowFunction& win, double h_t, QuadratureRule rule, Slice&& slice) {
  const AxisRule tr = axis_rule(win.t_lo, win.t_hi, h_t, rule, false);
  for (std::size_t k = 0; k < tr.w.size(); ++k) slice(tr.lo + k * tr.h, tr.w[k]);
}

QoIValue space_time_impl(const FieldSpec& fs, const QoISpec& spec, const Vec& y, const double* t_fixed,
                         bool check) {
  check_parameter(fs, y);
  check_order(spec.ord, fs.fan->n);
  const double eps = fs.epsilon;
  const double hx = spec.space_step(eps);
  const double ht = spec.time_step(eps);
  if (check) check_resolution("h_x", hx, eps, spec.resolution);
  if (check && !t_fixed) check_resolution("h_t", ht, eps, spec.resolution);
  const WindowFunction& win = window_for(fs, spec);

  QoIValue out;
  out.h_x = hx;
  out.normalization = normalization(spec.ord);
  std::vector<cplx> v;
  auto slice = [&](double t, double wt) {
    const SpaceRule sr = space_rule(*fs.scenario, win, spec.g, t, y, hx, spec.rule);
    out.space_nodes = sr.grid.size();
    if (sr.grid.size() == 0) return;
    field_on_grid(fs, spec.ord, t, sr.grid, v, spec.backend);
    out.value += wt * integrate(sr.weight, v);
  };
  if (t_fixed) {
    slice(*t_fixed, 1.0);
  } else {
    out.h_t = ht;
    const AxisRule tr = axis_rule(win.t_lo, win.t_hi, ht, spec.rule, false);
    out.h_t = tr.h;
    out.time_nodes = tr.w.size();
    for (std::size_t k = 0; k < tr.w.size(); ++k) slice(tr.lo + k * tr.h, tr.w[k]);
  }
  return out;
}

QoIValue with_estimate(const FieldSpec& fs, const QoISpec& spec, const Vec& y, const double* t) {
  QoIValue v = space_time_impl(fs, spec, y, t, true);
  if (spec.estimate_error) {
    QoISpec coarse = spec;
    coarse.h_x = 2 * v.h_x;
    coarse.h_t = t ? spec.time_step(fs.epsilon) : 2 * v.h_t;
    const QoIValue c = space_time_impl(fs, coarse, y, t, false);
    v.err_est = std::abs(v.value - c.value) / 3.0;
  }
  return v;
}

}  // namespace

QoIValue qoi_space(const FieldSpec& fs, const QoISpec& spec, double t, const Vec& y) {
  if (spec.kind != QoIKind::space) throw std::invalid_argument("qoi_space needs kind=space");
  return with_estimate(fs, spec, y, &t);
}

QoIValue qoi_spacetime(const FieldSpec& fs, const QoISpec& spec, const Vec& y) {
  if (spec.kind == QoIKind::space) throw std::invalid_argument("qoi_spacetime needs a time-integrated kind");
  return with_estimate(fs, spec, y, nullptr);
}

QoIValue qoi_energy(const FieldSpec& fs, const WindowFunction& window, const Vec& y, QoISpec base) {
  base.kind = QoIKind::spacetime;
  base.window = window;
  base.ord = DerivativeOrder::time(1);
  base.g = [](double, const Vec&, const Vec&) { return 1.0; };
  QoIValue total = qoi_spacetime(fs, base, y);
  const auto scen = fs.scenario;
  base.g = [scen](double, const Vec& x, const Vec& yy) {
    const double c = scen->medium.eval(x, yy);
    return c * c;
  };
  for (int i = 0; i < fs.fan->n; ++i) {
    base.ord = DerivativeOrder::space(i);
    const QoIValue part = qoi_spacetime(fs, base, y);
    total.value += part.value;
    if (!std::isnan(total.err_est)) total.err_est += part.err_est;
  }
  total.normalization = "eps^2 (|u_t|^2 + c^2 |grad u|^2)";
  return total;
}

QoIValue qoi_arias(const FieldSpec& fs, const WindowFunction& window, const Vec& y, QoISpec base) {
  base.kind = QoIKind::spacetime;
  base.window = window;
  base.ord = DerivativeOrder::time(2);
  QoIValue v = qoi_spacetime(fs, base, y);
  v.normalization = "eps^4 |u_tt|^2";
  return v;
}

QoIValue evaluate_qoi(const FieldSpec& fs, const QoISpec& spec, const Vec& y, double t) {
  const WindowFunction& win = spec.window ? *spec.window : fs.scenario->window_spacetime;
  switch (spec.kind) {
    case QoIKind::space: return qoi_space(fs, spec, t, y);
    case QoIKind::spacetime: return qoi_spacetime(fs, spec, y);
    case QoIKind::energy: return qoi_energy(fs, win, y, spec);
    case QoIKind::arias: return qoi_arias(fs, win, y, spec);
  }
  throw std::logic_error("unreachable");
}

QoIDecomposition qoi_decomposition(const FieldSpec& fs, const QoISpec& spec, const Vec& y, double t) {
  if (!fs.fan->has(Mode::plus) || !fs.fan->has(Mode::minus))
    throw std::invalid_argument("decomposition needs a two-mode fan");
  check_parameter(fs, y);
  check_order(spec.ord, fs.fan->n);
  const double eps = fs.epsilon;
  const double hx = spec.space_step(eps);
  const double ht = spec.time_step(eps);
  check_resolution("h_x", hx, eps, spec.resolution);
  const bool timed = spec.kind != QoIKind::space;
  if (timed) check_resolution("h_t", ht, eps, spec.resolution);
  const WindowFunction& win = window_for(fs, spec);

  FieldSpec fp = fs, fm = fs;
  fp.modes = {Mode::plus};
  fm.modes = {Mode::minus};
  QoIDecomposition d;
  std::vector<cplx> up, um;
  auto slice = [&](double tt, double wt) {
    const SpaceRule sr = space_rule(*fs.scenario, win, spec.g, tt, y, hx, spec.rule);
    if (sr.grid.size() == 0) return;
    field_on_grid(fp, spec.ord, tt, sr.grid, up, spec.backend);
    field_on_grid(fm, spec.ord, tt, sr.grid, um, spec.backend);
    d.q_plus += wt * integrate(sr.weight, up);
    d.q_minus += wt * integrate(sr.weight, um);
    d.q_cross += wt * integrate_cross(sr.weight, up, um);
  };
  if (timed) over_time(win, ht, spec.rule, slice);
  else slice(t, 1.0);
  return d;
}

std::vector<Vec> admissibility_samples(int n, double radius, int count) {
  std::vector<Vec> out;
  count = std::max(count, 2);
  if (n == 1) {
    for (int i = 0; i < count; ++i) {
      const double x = -radius + 2.0 * radius * i / (count - 1);
      if (std::abs(x) > 1e-12 * radius) out.push_back(vec({x}));
    }
    return out;
  }
  const int nr = std::max(1, static_cast<int>(std::lround(std::sqrt(count))));
  const int nd = std::max(2, count / nr);
  std::vector<Vec> dirs;
  if (n == 2) {
    for (int j = 0; j < nd; ++j) {
      const double a = std::numbers::pi * j / nd;  // half circle suffices: the form is even
      dirs.push_back(vec({std::cos(a), std::sin(a)}));
    }
  } else {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int j = 0; j < nd; ++j) {
      const double zc = 1.0 - 2.0 * (j + 0.5) / nd;
      const double rr = std::sqrt(1.0 - zc * zc);
      dirs.push_back(vec({rr * std::cos(golden * j), rr * std::sin(golden * j), zc}));
    }
  }
  for (int k = 1; k <= nr; ++k)
    for (const Vec& u : dirs) out.push_back(radius * k / nr * u);
  return out;
}

AdmissibilityReport check_admissibility(const BeamFan& fan, double eta, const std::vector<double>& t_samples,
                                        const std::vector<Vec>& x_samples) {
  AdmissibilityReport rep;
  rep.eta_checked = eta;
  rep.y = fan.y;
  const double rmax = std::isfinite(eta) ? 2.0 * eta : kInf;
  for (Mode m : fan.modes) {
    const auto& trs = fan.trajectories(m);
    for (std::size_t j = 0; j < trs.size(); ++j) {
      for (double t : t_samples) {
        const BeamState s = trs[j].state_at(t);
        const Mat im = s.M.imag();
        for (const Vec& x : x_samples) {
          const double r2 = x.squaredNorm();
          if (r2 == 0.0 || std::sqrt(r2) > rmax) continue;
          const double ratio = 0.5 * x.dot(im * x) / r2;
          if (ratio < rep.delta) {
            rep.delta = ratio;
            rep.t = t;
            rep.z = trs[j].z;
            rep.x = x;
          }
        }
      }
    }
  }
  rep.pass = std::isfinite(rep.delta) && rep.delta > 0.0;
  return rep;
}

double no_cutoff_eta(const BeamFan& fan, const Box& window_support) {
  double R = 0.0;
  const int n = window_support.dim();
  for (int corner = 0; corner < (1 << n); ++corner) {
    Vec c(n);
    for (int k = 0; k < n; ++k) c(k) = (corner >> k) & 1 ? window_support.hi(k) : window_support.lo(k);
    R = std::max(R, c.norm());
  }
  double qmax = 0.0;
  for (Mode m : fan.modes)
    for (const auto& tr : fan.trajectories(m))
      for (std::size_t k = 0; k < tr.size(); ++k) qmax = std::max(qmax, tr.sample(k).q.norm());
  return R + qmax + 1e-3;
}

}  // namespace gbq
