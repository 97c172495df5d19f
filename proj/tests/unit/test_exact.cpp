#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "gbq/errors.hpp"
#include "gbq/exact.hpp"

using namespace gbq;
using namespace std::complex_literals;

namespace {

std::shared_ptr<const ScenarioPreset> preset(PhaseKind1D k, double s) {
  return std::make_shared<const ScenarioPreset>(preset_1d(k, s));
}

double b0(double x, double s) { return std::exp(-5 * (x + s) * (x + s)) + std::exp(-5 * (x - s) * (x - s)); }

// Plain trapezoid over [-4, 4] with a fixed fine step, independent of the library rule.
template <class F>
double integrate(F f, double h = 2.5e-4) {
  double acc = 0.0;
  for (double x = -4.0; x <= 4.0 + 1e-12; x += h) acc += f(x);
  return acc * h;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("closed-form solution") {
  const double s = 1.5, eps = 1.0 / 40;
  const auto sc = preset(PhaseKind1D::linear, s);
  const DAlembertField f = make_dalembert(sc, vec({2.0}), eps);
  CHECK(f.c == 2.0);
  for (double x : {-2.0, -1.5, 0.3, 1.4}) {
    CHECK(std::abs(eval_dalembert(f, 0.0, x) - b0(x, s) * std::exp(1i * x / eps)) < 1e-14);
    const double t = 0.6;
    CHECK(std::abs(eval_dalembert(f, t, x, Mode::plus)) == doctest::Approx(0.5 * b0(x - 2 * t, s)));
    CHECK(std::abs(eval_dalembert(f, t, x, Mode::minus)) == doctest::Approx(0.5 * b0(x + 2 * t, s)));
    const cplx sum = eval_dalembert(f, t, x, Mode::plus) + eval_dalembert(f, t, x, Mode::minus);
    CHECK(std::abs(eval_dalembert(f, t, x) - sum) < 1e-15);
  }
  // Right-going pulses at t = 2 sit at +-s + 4.
  CHECK(std::abs(eval_dalembert(f, 2.0, 4.0 + s, Mode::plus)) == doctest::Approx(0.5 * b0(s, s)));
  CHECK(std::abs(eval_dalembert(f, 2.0, 4.0 - s, Mode::plus)) == doctest::Approx(0.5 * b0(-s, s)));
  // Modulus does not depend on epsilon.
  const DAlembertField g = make_dalembert(sc, vec({2.0}), 1.0 / 160);
  CHECK(std::abs(eval_dalembert(g, 1.3, 0.8, Mode::plus)) ==
        doctest::Approx(std::abs(eval_dalembert(f, 1.3, 0.8, Mode::plus))).epsilon(1e-14));
}

TEST_CASE("unsupported scenarios") {
  auto two = std::make_shared<const ScenarioPreset>(preset_2d(PhaseKind2D::abs));
  CHECK_THROWS_AS(make_dalembert(two, vec({0.2, 1.0}), 1.0 / 40), UnsupportedScenario);
  auto varying = std::make_shared<ScenarioPreset>(preset_1d(PhaseKind1D::linear, 3.0));
  varying->medium.x_independent = false;
  CHECK_THROWS_AS(make_dalembert(varying, vec({1.75}), 1.0 / 40), UnsupportedScenario);
  auto b1 = std::make_shared<ScenarioPreset>(preset_1d(PhaseKind1D::linear, 3.0));
  b1->data.B1 = [](const Vec&, const Vec&) { return 0.1; };
  CHECK_THROWS_AS(make_dalembert(b1, vec({1.75}), 1.0 / 40), UnsupportedScenario);
}

TEST_CASE("space decomposition against direct quadratures") {
  const double s = 3.0, y = 1.75, t = 2.0;
  const auto sc = preset(PhaseKind1D::linear, s);
  for (double eps : {1.0 / 40, 1.0 / 80}) {
    const DAlembertField f = make_dalembert(sc, vec({y}), eps);
    const ExactQoIDecomposition d = exact_qoi_space(f, sc->window, t);
    auto psi = [](double x) { return std::exp(-5 * x * x); };
    const double qp = integrate([&](double x) { return 0.25 * b0(x - y * t, s) * b0(x - y * t, s) * psi(x); });
    const double qm = integrate([&](double x) { return 0.25 * b0(x + y * t, s) * b0(x + y * t, s) * psi(x); });
    const double overlap = integrate([&](double x) { return b0(x + y * t, s) * b0(x - y * t, s) * psi(x); });
    CHECK(rel(d.plus, qp) < 1e-8);
    CHECK(rel(d.minus, qm) < 1e-8);
    // phi0 = x: the interaction phase is 2 y t, constant in x.
    CHECK(std::abs(d.cross - 0.5 * std::cos(2 * y * t / eps) * overlap) <= 1e-8 * overlap);
    // The total is the window integral of |u|^2.
    const double direct = integrate([&](double x) { return std::norm(eval_dalembert(f, t, x)) * psi(x); });
    CHECK(rel(d.total(), direct) < 1e-8);
  }
}

TEST_CASE("overlap factorisation for phi0 = x") {
  const double s = 1.5, eps = 1.0 / 80;
  const auto sc = preset(PhaseKind1D::linear, s);
  for (double y : {1.5, 1.62, 1.81, 2.0}) {
    const double t = 0.9;
    const DAlembertField f = make_dalembert(sc, vec({y}), eps);
    const double cs = std::cos(2 * y * t / eps);
    if (std::abs(cs) <= 0.1) continue;
    const double overlap = integrate(
        [&](double x) { return b0(x + y * t, s) * b0(x - y * t, s) * std::exp(-5 * x * x); });
    CHECK(rel(exact_qoi_space(f, sc->window, t).cross * 2 / cs, overlap) < 1e-8);
  }
}

TEST_CASE("one-mode parts do not depend on epsilon") {
  const auto sc = preset(PhaseKind1D::quadratic, 3.0);
  for (double y : {1.5, 1.75, 2.0}) {
    const auto a = exact_qoi_space(make_dalembert(sc, vec({y}), 1.0 / 40), sc->window, 2.0);
    const auto b = exact_qoi_space(make_dalembert(sc, vec({y}), 1.0 / 160), sc->window, 2.0);
    CHECK(rel(a.plus, b.plus) < 1e-8);
    CHECK(rel(a.minus, b.minus) < 1e-8);
  }
  // Same for a y-difference of the one-mode part.
  auto dq = [&](double eps) {
    const double h = 1e-3;
    auto q = [&](double y) { return exact_qoi_space(make_dalembert(sc, vec({y}), eps), sc->window, 2.0).minus; };
    return (q(1.75 + h) - q(1.75 - h)) / (2 * h);
  };
  CHECK(rel(dq(1.0 / 40), dq(1.0 / 160)) < 1e-8);
}

TEST_CASE("phi0 = x^2: interaction term decays with epsilon") {
  const double s = 1.5;
  const auto sc = preset(PhaseKind1D::quadratic, s);
  auto sup_cross = [&](double eps) {
    double m = 0.0;
    for (int k = 0; k <= 50; ++k) {
      const double y = 1.5 + 0.01 * k;
      m = std::max(m, std::abs(exact_qoi_space(make_dalembert(sc, vec({y}), eps), sc->window, 0.5).cross));
    }
    return m;
  };
  const double a = sup_cross(1.0 / 40), b = sup_cross(1.0 / 80);
  CHECK(a > 0.0);
  CHECK(b <= 0.5 * a);
}

TEST_CASE("space-time decomposition") {
  const double s = 3.0;
  const auto sc = preset(PhaseKind1D::linear, s);
  const WindowFunction& win = sc->window_spacetime;
  for (double eps : {1.0 / 40, 1.0 / 80, 1.0 / 160}) {
    for (double y : {1.5, 1.75, 2.0}) {
      const DAlembertField f = make_dalembert(sc, vec({y}), eps);
      const ExactQoIDecomposition d = exact_qoi_spacetime(f, win);
      CHECK(d.plus > 0.0);
      CHECK(std::abs(d.cross) <= 1e-5 * d.plus);
      CHECK(d.total() == doctest::Approx(d.plus + d.minus + d.cross));
    }
  }
  // Fubini: integrate the space decomposition over the window's time support.
  const DAlembertField f = make_dalembert(sc, vec({1.7}), 1.0 / 40);
  const ExactQoIDecomposition d = exact_qoi_spacetime(f, win);
  const double ht = 1e-3;
  double plus = 0.0, minus = 0.0;
  for (double t = win.t_lo; t <= win.t_hi + 1e-12; t += ht) {
    const auto e = exact_qoi_space(f, win, t);
    plus += e.plus * ht;
    minus += e.minus * ht;
  }
  CHECK(rel(d.plus, plus) < 1e-6);
  CHECK(rel(d.minus, minus) < 1e-6);
}

TEST_CASE("beam results against the closed form") {
  const auto sc = preset(PhaseKind1D::linear, 3.0);
  const auto rows = gb_vs_exact_report(sc, {1.0 / 40, 1.0 / 80, 1.0 / 160});
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].field_error <= 0.7 * rows[0].field_error);
  CHECK(rows[2].field_error <= 0.7 * rows[1].field_error);
  CHECK(rows[2].space_error() <= rows[1].space_error());
  CHECK(rows[2].spacetime_error() <= rows[1].spacetime_error());
  for (const auto& r : rows) {
    CHECK(r.space_exact > 0.0);
    CHECK(r.spacetime_exact > 0.0);
    CHECK(r.seconds >= 0.0);
  }

  // t = 0 reconstruction with a two-mode fan.
  const auto s15 = preset_1d(PhaseKind1D::linear, 1.5);
  const double eps = 1.0 / 40;
  const BeamFan fan = build_fan(s15, vec({1.75}), 1e-6, 0.5 * std::sqrt(eps), {Mode::plus, Mode::minus});
  const double e = initial_reconstruction_error(s15, fan, eps);
  CHECK(e > 0.0);
  CHECK(e < 0.15);
}
