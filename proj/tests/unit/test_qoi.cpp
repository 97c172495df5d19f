#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "gbq/errors.hpp"
#include "gbq/qoi.hpp"

using namespace gbq;

namespace {

struct Setup {
  std::shared_ptr<const ScenarioPreset> s;
  std::shared_ptr<const BeamFan> fan;
  Vec y;
};

Setup make(ScenarioPreset p, const Vec& y, double T, double eps, std::vector<Mode> modes) {
  auto s = std::make_shared<const ScenarioPreset>(std::move(p));
  auto fan = std::make_shared<const BeamFan>(build_fan(*s, y, T, 0.5 * std::sqrt(eps), modes));
  return {s, fan, y};
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Constant speed, phi0 = x and M = i: every one-mode beam sum is the initial
// amplitude smoothed by a Gaussian of variance eps, carried at speed c. For
// Gaussian pulses that smoothing is closed form.
double smoothed_b0(double x, double s, double eps) {
  const double k = 1.0 + 10.0 * eps;
  return (std::exp(-5 * (x + s) * (x + s) / k) + std::exp(-5 * (x - s) * (x - s) / k)) / std::sqrt(k);
}

// 1/4 int Bs(x + c t)^2 exp(-5 x^2) dx by a fine trapezoid.
double smoothed_one_mode_space(double s, double c, double t, double eps) {
  const double h = 1e-4;
  double acc = 0.0;
  for (double x = -5.0; x <= 5.0; x += h) {
    const double b = smoothed_b0(x + c * t, s, eps);
    acc += 0.25 * b * b * std::exp(-5 * x * x);
  }
  return acc * h;
}

}  // namespace

TEST_CASE("space QoI: sign, grid check and self-convergence") {
  const double eps = 1.0 / 40;
  auto st = make(preset_1d(PhaseKind1D::quadratic, 3.0), vec({1.75}), 2.0, eps, {Mode::plus, Mode::minus});
  const FieldSpec fs = make_field_spec(st.s, st.fan, eps);
  QoISpec q;
  const QoIValue v = qoi_space(fs, q, 2.0, st.y);
  CHECK(v.value >= -1e-8);
  CHECK(v.h_x <= eps / 8);
  CHECK(v.time_nodes == 0);
  CHECK_FALSE(v.normalization.empty());

  QoISpec fine = q;
  fine.h_x = v.h_x / 2;
  CHECK(rel(qoi_space(fs, fine, 2.0, st.y).value, v.value) < 1e-3);

  QoISpec coarse = q;
  coarse.h_x = eps / 4;
  CHECK_THROWS_AS(qoi_space(fs, coarse, 2.0, st.y), GridTooCoarse);
  QoISpec coarse_t;
  coarse_t.kind = QoIKind::spacetime;
  coarse_t.h_t = eps;
  CHECK_THROWS_AS(qoi_spacetime(fs, coarse_t, st.y), GridTooCoarse);

  CHECK_THROWS(qoi_space(fs, q, 2.0, vec({1.5})));
}

TEST_CASE("step selection") {
  QoISpec q;
  CHECK(q.space_step(0.1) == doctest::Approx(0.1 / 8));
  q.h_x_eps = 0.5;
  CHECK(q.space_step(0.1) == doctest::Approx(0.05));
  q.h_x = 0.003;
  CHECK(q.space_step(0.1) == 0.003);
  q.h_t_eps = 0.25;
  CHECK(q.time_step(0.1) == doctest::Approx(0.025));
}

TEST_CASE("one-mode space QoI equals the smoothed-data closed form") {
  const double eps = 1.0 / 80, c = 1.75, t = 2.0;
  auto st = make(preset_1d(PhaseKind1D::linear, 3.0), vec({c}), 2.1, eps, {Mode::minus});
  const FieldSpec fs = make_field_spec(st.s, st.fan, eps);
  const QoIValue v = qoi_space(fs, QoISpec{}, t, st.y);
  CHECK(rel(v.value, smoothed_one_mode_space(3.0, c, t, eps)) < 1e-5);

  // The space-time value integrates the same closed form against the time window.
  QoISpec qs;
  qs.kind = QoIKind::spacetime;
  const QoIValue w = qoi_spacetime(fs, qs, st.y);
  const WindowFunction& win = st.s->window_spacetime;
  double ref = 0.0;
  const double ht = 1e-3;
  for (double tt = win.t_lo; tt <= win.t_hi; tt += ht) {
    const double pt = win.psi(tt, vec({0.0}));
    ref += pt * smoothed_one_mode_space(3.0, c, tt, eps) * ht;
  }
  CHECK(rel(w.value, ref) < 1e-4);
  CHECK(w.time_nodes > 0);
}

TEST_CASE("narrow time window reduces to the space QoI at its centre") {
  const double eps = 1.0 / 40, t0 = 1.0, sd = 0.01;
  auto st = make(preset_1d(PhaseKind1D::linear, 3.0), vec({1.6}), 1.2, eps, {Mode::plus});
  const FieldSpec fs = make_field_spec(st.s, st.fan, eps);
  WindowFunction win = st.s->window;
  const double norm = 1.0 / (sd * std::sqrt(2 * std::numbers::pi));
  win.psi = [=](double t, const Vec& x) {
    return norm * std::exp(-0.5 * (t - t0) * (t - t0) / (sd * sd)) * std::exp(-5 * x(0) * x(0));
  };
  win.time_dependent = true;
  win.t_lo = t0 - 7 * sd;
  win.t_hi = t0 + 7 * sd;
  QoISpec q;
  q.kind = QoIKind::spacetime;
  q.window = win;
  const double Q = qoi_spacetime(fs, q, st.y).value;
  const double Qt = qoi_space(fs, QoISpec{}, t0, st.y).value;
  CHECK(rel(Q, Qt) < 0.1);
}

TEST_CASE("two-mode value splits into one-mode parts and the cross term") {
  const double eps = 1.0 / 40;
  auto st = make(preset_1d(PhaseKind1D::linear, 1.5), vec({1.7}), 2.5, eps, {Mode::plus, Mode::minus});
  const FieldSpec fs = make_field_spec(st.s, st.fan, eps);
  const FieldSpec fp = make_field_spec(st.s, st.fan, eps, {Mode::plus});
  const FieldSpec fm = make_field_spec(st.s, st.fan, eps, {Mode::minus});
  for (QoIKind kind : {QoIKind::space, QoIKind::spacetime}) {
    QoISpec q;
    q.kind = kind;
    const double t = 0.4;
    const QoIDecomposition d = qoi_decomposition(fs, q, st.y, t);
    const double total = evaluate_qoi(fs, q, st.y, t).value;
    CHECK(std::abs(d.assembled() - total) <= 1e-12 * std::abs(total));
    CHECK(rel(d.q_plus, evaluate_qoi(fp, q, st.y, t).value) < 1e-13);
    CHECK(rel(d.q_minus, evaluate_qoi(fm, q, st.y, t).value) < 1e-13);
    CHECK(std::abs(d.q_cross) > 0.0);
  }
}

TEST_CASE("energy and Arias intensity") {
  const double eps = 1.0 / 40;
  auto st = make(preset_1d(PhaseKind1D::linear, 3.0), vec({1.75}), 2.5, eps, {Mode::minus});
  const FieldSpec fs = make_field_spec(st.s, st.fan, eps);
  const WindowFunction& win = st.s->window_spacetime;

  SUBCASE("definition") {
    const double E = qoi_energy(fs, win, st.y).value;
    QoISpec q;
    q.kind = QoIKind::spacetime;
    q.window = win;
    q.ord = DerivativeOrder::time(1);
    q.g = [](double, const Vec&, const Vec&) { return 1.0; };
    const double kin = qoi_spacetime(fs, q, st.y).value;
    q.ord = DerivativeOrder::space(0);
    q.g = [](double, const Vec&, const Vec& y) { return y(0) * y(0); };
    const double pot = qoi_spacetime(fs, q, st.y).value;
    CHECK(std::abs(E - (kin + pot)) <= 1e-14 * E);
    // High-frequency equipartition: E is twice either part.
    CHECK(rel(E, 2 * pot) < 0.05);
  }

  SUBCASE("empty fan gives zero") {
    auto empty = std::make_shared<BeamFan>(*st.fan);
    empty->z.clear();
    empty->weights.clear();
    empty->minus.clear();
    const FieldSpec fe = make_field_spec(st.s, empty, eps);
    CHECK(qoi_energy(fe, win, st.y).value == 0.0);
    CHECK(qoi_arias(fe, win, st.y).value == 0.0);
  }

  SUBCASE("Arias intensity insensitive to the difference step") {
    FieldSpec half = fs;
    half.fd_step_factor = 1.0 / 40;
    const double a = qoi_arias(fs, win, st.y).value, b = qoi_arias(half, win, st.y).value;
    CHECK(a > 0.0);
    CHECK(rel(a, b) < 0.01);
  }
}

TEST_CASE("Arias to energy ratio is stable in epsilon") {
  std::vector<double> ratio;
  for (double eps : {1.0 / 40, 1.0 / 80}) {
    auto st = make(preset_1d(PhaseKind1D::linear, 3.0), vec({1.75}), 2.5, eps, {Mode::minus});
    const FieldSpec fs = make_field_spec(st.s, st.fan, eps);
    const WindowFunction& win = st.s->window_spacetime;
    ratio.push_back(qoi_arias(fs, win, st.y).value / qoi_energy(fs, win, st.y).value);
  }
  CHECK(rel(ratio[1], ratio[0]) < 0.1);
}

TEST_CASE("Richardson error estimate") {
  const double eps = 1.0 / 40;
  auto st = make(preset_2d(PhaseKind2D::abs), vec({0.25, 1.0}), 1.0, eps, {Mode::minus});
  const FieldSpec fs = make_field_spec(st.s, st.fan, eps);
  QoISpec q;
  q.resolution = 2.0;
  q.estimate_error = true;
  const QoIValue v = qoi_space(fs, q, 1.0, st.y);
  CHECK(std::isfinite(v.err_est));
  CHECK(v.value >= -10 * std::abs(v.err_est));
  CHECK(v.value > 0.0);
}

TEST_CASE("positivity with derivative orders on a 2D preset") {
  const double eps = 1.0 / 40;
  auto st = make(preset_2d(PhaseKind2D::linear), vec({0.1, 1.1}), 1.0, eps, {Mode::plus, Mode::minus});
  const FieldSpec fs = make_field_spec(st.s, st.fan, eps);
  for (DerivativeOrder o : {DerivativeOrder{}, DerivativeOrder::space(1), DerivativeOrder::time(1)}) {
    QoISpec q;
    q.ord = o;
    q.resolution = 2.0;
    CHECK(qoi_space(fs, q, 1.0, st.y).value >= -1e-8);
  }
}

TEST_CASE("admissibility") {
  SUBCASE("1D constant speed: delta = 1/2 at every time") {
    for (PhaseKind1D k : {PhaseKind1D::linear, PhaseKind1D::quadratic}) {
      auto st = make(preset_1d(k, 3.0), vec({1.9}), 2.0, 1.0 / 40, {Mode::plus, Mode::minus});
      for (double t : {0.0, 0.5, 1.3, 2.0}) {
        const auto rep = check_admissibility(*st.fan, 1.0, {t}, admissibility_samples(1, 2.0, 41));
        CHECK(rep.delta == doctest::Approx(0.5).epsilon(1e-9));
        CHECK(rep.pass);
      }
    }
  }
  SUBCASE("t = 0 on 2D presets") {
    auto st = make(preset_2d(PhaseKind2D::abs), vec({0.0, 0.8}), 1.0, 1.0 / 30, {Mode::plus, Mode::minus});
    const auto rep = check_admissibility(*st.fan, 0.5, {0.0}, admissibility_samples(2, 1.0, 64));
    CHECK(rep.delta == doctest::Approx(0.5).epsilon(1e-9));
  }
  SUBCASE("2D: positive and non-increasing in eta") {
    auto st = make(preset_2d(PhaseKind2D::abs), vec({0.5, 1.2}), 1.0, 1.0 / 30, {Mode::minus});
    std::vector<double> ts;
    for (int k = 0; k <= 10; ++k) ts.push_back(0.1 * k);
    const auto xs = admissibility_samples(2, 4.0, 400);
    double prev = kInf;
    for (double eta : {0.25, 0.5, 1.0, 2.0}) {
      const auto rep = check_admissibility(*st.fan, eta, ts, xs);
      CHECK(rep.pass);
      CHECK(rep.delta > 0.0);
      CHECK(rep.delta <= prev);
      prev = rep.delta;
    }
  }
}

TEST_CASE("cutoff at the no-cutoff radius reproduces the cutoff-free QoI") {
  for (PhaseKind1D k : {PhaseKind1D::linear, PhaseKind1D::quadratic}) {
    for (double eps : {1.0 / 40, 1.0 / 80}) {
      auto st = make(preset_1d(k, 3.0), vec({1.75}), 2.0, eps, {Mode::plus, Mode::minus});
      const double eta = no_cutoff_eta(*st.fan, st.s->window.support);
      const FieldSpec inf = make_field_spec(st.s, st.fan, eps);
      const FieldSpec fin = make_field_spec(st.s, st.fan, eps, {}, CutoffSpec{eta});
      const double a = qoi_space(inf, QoISpec{}, 2.0, st.y).value;
      const double b = qoi_space(fin, QoISpec{}, 2.0, st.y).value;
      CHECK(std::abs(a - b) <= 1e-12 * std::abs(a));
    }
  }
}

TEST_CASE("kind names") {
  CHECK(qoi_kind_from_string("space") == QoIKind::space);
  CHECK(qoi_kind_from_string("spacetime") == QoIKind::spacetime);
  CHECK(qoi_kind_from_string("arias") == QoIKind::arias);
  CHECK(std::string(to_string(QoIKind::energy)) == "energy");
  CHECK_THROWS(qoi_kind_from_string("volume"));
}
