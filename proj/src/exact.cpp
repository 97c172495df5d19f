#include "gbq/exact.hpp"

#include <chrono>
#include <cmath>

#include "gbq/errors.hpp"
#include "gbq/field_kernel.hpp"
#include "gbq/qoi.hpp"

namespace gbq {

DAlembertField make_dalembert(std::shared_ptr<const ScenarioPreset> s, const Vec& y, double epsilon) {
  if (s->n != 1) throw UnsupportedScenario("closed-form solution needs n = 1, scenario '" + s->name + "' has n = " +
                                           std::to_string(s->n));
  if (!s->medium.x_independent) throw UnsupportedScenario("closed-form solution needs a speed constant in x");
  const Box& k = s->data.support;
  for (int i = 0; i <= 16; ++i) {
    const Vec x = vec({k.lo(0) + (k.hi(0) - k.lo(0)) * i / 16.0});
    if (s->data.B1(x, y) != 0.0) throw UnsupportedScenario("closed-form solution needs B1 = 0");
  }
  DAlembertField f;
  f.scenario = std::move(s);
  f.y = y;
  f.c = f.scenario->medium.eval(Vec::Zero(1), y);
  f.epsilon = epsilon;
  return f;
}

cplx eval_dalembert(const DAlembertField& f, double t, double x, Mode m) {
  const Vec xi = vec({x - sign(m) * f.c * t});
  const double b = f.scenario->data.B0(xi, f.y);
  if (b == 0.0) return 0.0;
  return 0.5 * b * std::exp(cplx(0.0, f.scenario->data.phi0(xi, f.y) / f.epsilon));
}

cplx eval_dalembert(const DAlembertField& f, double t, double x) {
  return eval_dalembert(f, t, x, Mode::plus) + eval_dalembert(f, t, x, Mode::minus);
}

namespace {

// Trapezoid nodes over [a, b] with spacing <= h.
template <class F>
void trapezoid(double a, double b, double h, F&& f) {
  const int m = std::max(1, static_cast<int>(std::ceil((b - a) / h - 1e-9)));
  const double hh = (b - a) / m;
  for (int i = 0; i <= m; ++i) f(a + i * hh, (i == 0 || i == m) ? 0.5 * hh : hh);
}

ExactQoIDecomposition space_at(const DAlembertField& f, const WindowFunction& w, double t) {
  const ScenarioPreset& s = *f.scenario;
  const double ct = f.c * t;
  ExactQoIDecomposition d;
  trapezoid(w.support.lo(0), w.support.hi(0), kExactStepFactor * f.epsilon, [&](double x, double h) {
    const Vec xv = vec({x});
    const double psi = w.psi(t, xv) * s.g(t, xv, f.y);
    if (psi == 0.0) return;
    const Vec xp = vec({x - ct}), xm = vec({x + ct});
    const double bp = s.data.B0(xp, f.y), bm = s.data.B0(xm, f.y);
    d.plus += h * 0.25 * bp * bp * psi;
    d.minus += h * 0.25 * bm * bm * psi;
    if (bp != 0.0 && bm != 0.0) {
      const double phi = s.data.phi0(xm, f.y) - s.data.phi0(xp, f.y);
      d.cross += h * 0.5 * std::cos(phi / f.epsilon) * bp * bm * psi;
    }
  });
  return d;
}

}  // namespace

ExactQoIDecomposition exact_qoi_space(const DAlembertField& f, const WindowFunction& window, double t) {
  return space_at(f, window, t);
}

ExactQoIDecomposition exact_qoi_spacetime(const DAlembertField& f, const WindowFunction& window) {
  ExactQoIDecomposition d;
  trapezoid(window.t_lo, window.t_hi, kExactStepFactor * f.epsilon, [&](double t, double h) {
    const ExactQoIDecomposition s = space_at(f, window, t);
    d.plus += h * s.plus;
    d.minus += h * s.minus;
    d.cross += h * s.cross;
  });
  return d;
}

double GbExactRow::space_error() const { return std::abs(space_gb - space_exact) / std::abs(space_exact); }
double GbExactRow::spacetime_error() const {
  return std::abs(spacetime_gb - spacetime_exact) / std::abs(spacetime_exact);
}

double initial_reconstruction_error(const ScenarioPreset& s, const BeamFan& fan, double epsilon) {
  auto sp = std::make_shared<const ScenarioPreset>(s);
  auto fp = std::make_shared<const BeamFan>(fan);
  const FieldSpec fs = make_field_spec(sp, fp, epsilon);
  const Box& box = s.window.support;
  const double h = kExactStepFactor * epsilon;
  const int m = static_cast<int>(std::ceil((box.hi(0) - box.lo(0)) / h));
  const PointGrid g = PointGrid::full(box.lo, vec({(box.hi(0) - box.lo(0)) / m}), {m + 1, 1, 1});
  std::vector<cplx> u;
  field_on_grid(fs, DerivativeOrder{}, 0.0, g, u);
  double num = 0.0, den = 0.0;
  for (int i = 0; i <= m; ++i) {
    const Vec x = g.point(0, i);
    const cplx ex = s.data.B0(x, fan.y) * std::exp(cplx(0.0, s.data.phi0(x, fan.y) / epsilon));
    num += std::norm(u[i] - ex);
    den += std::norm(ex);
  }
  return std::sqrt(num / den);
}

std::vector<GbExactRow> gb_vs_exact_report(std::shared_ptr<const ScenarioPreset> s,
                                           const std::vector<double>& epsilons, const GbExactOptions& opt) {
  const Vec y = opt.y.size() ? opt.y : Vec(0.5 * (s->parameter_box.lo + s->parameter_box.hi));
  const double t = opt.t >= 0 ? opt.t : s->default_time;
  const double T = std::max(t, s->window_spacetime.t_hi);
  std::vector<GbExactRow> rows;
  for (double eps : epsilons) {
    const auto start = std::chrono::steady_clock::now();
    GbExactRow row;
    row.epsilon = eps;
    auto fan = std::make_shared<const BeamFan>(
        build_fan(*s, y, T, opt.z_factor * std::sqrt(eps), {Mode::plus, Mode::minus}));
    row.field_error = initial_reconstruction_error(*s, *fan, eps);

    QoISpec q;
    q.resolution = opt.resolution;
    q.kind = QoIKind::space;
    row.space_gb = qoi_space(make_field_spec(s, fan, eps, {Mode::minus}), q, t, y).value;
    q.kind = QoIKind::spacetime;
    row.spacetime_gb = qoi_spacetime(make_field_spec(s, fan, eps), q, y).value;

    const DAlembertField f = make_dalembert(s, y, eps);
    row.space_exact = exact_qoi_space(f, s->window, t).minus;
    row.spacetime_exact = exact_qoi_spacetime(f, s->window_spacetime).total();
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rows.push_back(row);
  }
  return rows;
}

}  // namespace gbq
