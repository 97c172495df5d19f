#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "gbq/errors.hpp"
#include "gbq/exact.hpp"
#include "gbq/sweep.hpp"

using namespace gbq;

namespace {

// One-axis table filled from f(y) on a uniform grid.
template <class F>
SweepTable synthetic(const std::vector<double>& eps, double y0, double h, int count, F f) {
  SweepTable t;
  t.scenario = "synthetic";
  t.qoi = "space";
  t.sigmas = {0};
  t.epsilons = eps;
  for (double e : eps)
    for (int i = 0; i < count; ++i) {
      SweepRow r;
      r.epsilon = e;
      r.cell = i;
      r.y = vec({y0 + i * h});
      r.values = {f(e, r.y(0))};
      t.rows.push_back(r);
    }
  return t;
}

SweepPlan small_plan(PhaseKind1D k, int count, std::vector<int> sigmas) {
  SweepPlan p;
  p.scenario = std::make_shared<const ScenarioPreset>(preset_1d(k, 3.0));
  p.epsilons = {1.0 / 40};
  p.counts = {count};
  p.sigmas = std::move(sigmas);
  p.qoi.kind = QoIKind::space;
  return p;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("central stencils") {
  CHECK(central_stencil(0) == std::vector<double>{1.0});
  CHECK(central_stencil(1) == std::vector<double>{-0.5, 0.0, 0.5});
  CHECK(central_stencil(2) == std::vector<double>{1.0, -2.0, 1.0});
  // Exact on polynomials up to the stencil's order.
  for (int sigma = 0; sigma <= 3; ++sigma) {
    const auto c = central_stencil(sigma);
    const int m = static_cast<int>(c.size() / 2);
    double acc = 0.0;
    for (int k = -m; k <= m; ++k) acc += c[k + m] * std::pow(k, sigma);
    CHECK(acc == doctest::Approx(std::tgamma(sigma + 1.0)));
  }
}

TEST_CASE("fd_derivative") {
  const double h = 0.01;
  const SweepTable t = synthetic({0.1}, 1.5, h, 51, [](double, double y) { return y * y; });
  const SweepTable d0 = fd_derivative(t, 0, h);
  REQUIRE(d0.rows.size() == t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) CHECK(d0.rows[i].values[0] == t.rows[i].values[0]);

  const SweepTable d2 = fd_derivative(t, 2, h);
  CHECK(d2.rows.size() == t.rows.size() - 2);
  for (const auto& r : d2.rows) CHECK(std::abs(r.values[0] - 2.0) < 1e-6);
  const SweepTable d1 = fd_derivative(t, 1, h);
  for (const auto& r : d1.rows) CHECK(std::abs(r.values[0] - 2.0 * r.y(0)) < 1e-9);

  CHECK_THROWS_AS(fd_derivative(synthetic({0.1}, 0.0, h, 2, [](double, double y) { return y; }), 2, h),
                  StencilOutOfDomain);
  SweepTable two_d = t;
  two_d.N = 2;
  for (auto& r : two_d.rows) r.y = vec({r.y(0), 0.0});
  CHECK_THROWS_AS(fd_derivative(two_d, 1, h), StencilOutOfDomain);
}

TEST_CASE("derivative of the oscillating interaction term") {
  // Q0 = cos(2 y t / eps) C(y) / 2 from the closed form; its y-derivative
  // has amplitude (t / eps) |C| up to the slow variation of C.
  const double eps = 1.0 / 40, t = 2.0, h = eps / 50;
  auto sc = std::make_shared<const ScenarioPreset>(preset_1d(PhaseKind1D::linear, 3.0));
  const int count = static_cast<int>(std::round(0.5 / h)) + 1;
  const SweepTable q = synthetic({eps}, 1.5, h, count, [&](double e, double y) {
    return exact_qoi_space(make_dalembert(sc, vec({y}), e), sc->window, t).cross;
  });
  double cmax = 0.0;
  for (const auto& r : q.rows) {
    const double y = r.y(0);
    const auto d = make_dalembert(sc, vec({y}), eps);
    const double cs = std::cos(2 * y * t / eps);
    if (std::abs(cs) > 0.5) cmax = std::max(cmax, std::abs(2 * exact_qoi_space(d, sc->window, t).cross / cs));
  }
  const SweepTable d1 = fd_derivative(q, 1, h);
  const double amp = max_abs(d1.series(eps, 0));
  CHECK(amp == doctest::Approx(t / eps * cmax).epsilon(0.05));
}

TEST_CASE("plan validation") {
  SweepPlan p = small_plan(PhaseKind1D::linear, 11, {0});
  CHECK_NOTHROW(p.validate());
  p.epsilons.clear();
  CHECK_THROWS_AS(p.validate(), InvalidPlan);
  CHECK_THROWS_AS(run_sweep(p), InvalidPlan);
  p = small_plan(PhaseKind1D::linear, 11, {});
  CHECK_THROWS_AS(p.validate(), InvalidPlan);
  p = small_plan(PhaseKind1D::linear, 11, {0});
  p.diagonal = true;
  CHECK_THROWS_AS(p.validate(), InvalidPlan);
  p = small_plan(PhaseKind1D::linear, 11, {0});
  p.box = Box{vec({1.0}), vec({2.0})};
  CHECK_THROWS_AS(p.validate(), InvalidPlan);
  p = small_plan(PhaseKind1D::linear, 11, {0});
  p.epsilons = {1.5};
  CHECK_THROWS_AS(p.validate(), InvalidPlan);

  SweepPlan d;
  d.scenario = std::make_shared<const ScenarioPreset>(preset_2d(PhaseKind2D::abs));
  d.epsilons = {1.0 / 30};
  d.counts = {101};
  d.diagonal = true;
  CHECK_NOTHROW(d.validate());
  CHECK(d.cell_count() == 101);
  double r = 0.0;
  const Vec y = d.cell_point(50, &r);
  CHECK(r == doctest::Approx(0.5));
  CHECK(y(0) == doctest::Approx(0.25));
  CHECK(y(1) == doctest::Approx(1.0));
  // Derivatives along a diagonal are taken in r.
  CHECK((d.derivative_direction() - vec({0.5, 0.4})).norm() < 1e-15);
  CHECK((small_plan(PhaseKind1D::linear, 11, {0}).derivative_direction() - vec({1.0})).norm() == 0.0);
}

TEST_CASE("figure-2 left plan gives a 303-row table") {
  SweepPlan p = small_plan(PhaseKind1D::linear, 101, {0});
  p.epsilons = {1.0 / 40, 1.0 / 80, 1.0 / 160};
  p.t = 2.0;
  p.qoi.resolution = 2.0;
  const SweepTable t = run_sweep(p);
  CHECK(t.rows.size() == 303u);
  CHECK(t.failures.empty());
  CHECK(t.series(1.0 / 80, 0).size() == 101u);
  CHECK(t.coordinate(1.0 / 80).front() == doctest::Approx(1.5));
  CHECK(t.coordinate(1.0 / 80).back() == doctest::Approx(2.0));
  for (const auto& r : t.rows) CHECK(r.values[0] >= 0.0);
}

TEST_CASE("reproducible tables and CSV round trip") {
  SweepPlan p = small_plan(PhaseKind1D::quadratic, 9, {0, 1, 2});
  const SweepTable a = run_sweep(p);
  const SweepTable b = run_sweep(p);
  p.workers = 2;
  const SweepTable c = run_sweep(p);
  std::ostringstream sa, sb, sc;
  a.write_csv(sa);
  b.write_csv(sb);
  c.write_csv(sc);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str() == sc.str());

  std::istringstream is(sa.str());
  const SweepTable back = read_sweep_table(is);
  REQUIRE(back.rows.size() == a.rows.size());
  CHECK(back.sigmas == a.sigmas);
  for (std::size_t i = 0; i < a.rows.size(); ++i)
    for (std::size_t k = 0; k < a.sigmas.size(); ++k) CHECK(back.rows[i].values[k] == a.rows[i].values[k]);
  std::ostringstream again;
  back.write_csv(again);
  CHECK(again.str() == sa.str());
}

TEST_CASE("halving the parameter step barely moves bounded derivatives") {
  SweepPlan p = small_plan(PhaseKind1D::quadratic, 5, {1});
  p.h_y = 1e-3;
  const SweepTable a = run_sweep(p);
  p.h_y = 5e-4;
  const SweepTable b = run_sweep(p);
  const double scale = max_abs(a.series(1.0 / 40, 0));
  for (std::size_t i = 0; i < a.rows.size(); ++i)
    CHECK(std::abs(a.rows[i].values[0] - b.rows[i].values[0]) < 0.01 * scale);
}

TEST_CASE("table-neighbour differences") {
  SweepPlan p = small_plan(PhaseKind1D::quadratic, 11, {0, 1});
  p.source = StencilSource::table;
  const SweepTable t = run_sweep(p);
  const SweepTable d = fd_derivative([&] {
    SweepTable only = t;
    only.sigmas = {0};
    for (auto& r : only.rows) r.values.resize(1);
    return only;
  }(), 1, 0.05);
  // Interior cells carry the neighbour difference; boundary cells have none.
  const auto s1 = t.series(1.0 / 40, 1);
  CHECK(std::isnan(s1.front()));
  CHECK(std::isnan(s1.back()));
  for (std::size_t i = 0; i < d.rows.size(); ++i) CHECK(s1[i + 1] == doctest::Approx(d.rows[i].values[0]).epsilon(1e-12));
}

TEST_CASE("failed cells are recorded and too many abort the sweep") {
  auto make = [](double y_bad) {
    auto s = std::make_shared<ScenarioPreset>(preset_1d(PhaseKind1D::linear, 3.0));
    auto c0 = s->medium.eval;
    s->medium.eval = [c0, y_bad](const Vec& x, const Vec& y) {
      if (y(0) > y_bad) throw std::runtime_error("speed model undefined here");
      return c0(x, y);
    };
    SweepPlan p;
    p.scenario = s;
    p.epsilons = {1.0 / 40};
    p.counts = {101};
    p.qoi.resolution = 2.0;
    return p;
  };
  const SweepTable t = run_sweep(make(1.999));
  CHECK(t.failures.size() == 1u);
  CHECK(std::isnan(t.rows.back().values[0]));
  CHECK_FALSE(t.rows.back().error.empty());
  std::ostringstream os;
  t.write_csv(os);
  CHECK(os.str().find(",failed") != std::string::npos);
  CHECK_THROWS_AS(run_sweep(make(1.98)), SweepFailed);
}

TEST_CASE("fit_scaling on synthetic tables") {
  const std::vector<double> eps{1.0 / 40, 1.0 / 80, 1.0 / 160};
  const double h = 0.005;
  SUBCASE("oscillatory") {
    SweepTable t = synthetic(eps, 1.5, h, 101, [](double e, double y) { return std::cos(2 * y / e) / e; });
    t.sigmas = {1};
    const ScalingFit f = fit_scaling(t, 1);
    CHECK(f.rho == doctest::Approx(1.0).epsilon(0.02));
    CHECK(f.cls == ScalingClass::oscillatory);
    REQUIRE(f.ratios.size() == 2);
    CHECK(f.ratios[0] == doctest::Approx(2.0).epsilon(0.02));
    CHECK(f.epsilons.front() > f.epsilons.back());
  }
  SUBCASE("bounded") {
    const SweepTable t = synthetic(eps, 1.5, h, 101, [](double e, double y) { return y * y + e; });
    const ScalingFit f = fit_scaling(t, 0);
    CHECK(std::abs(f.rho) < 0.1);
    CHECK(f.cls == ScalingClass::bounded);
    const auto js = nlohmann::json::parse(scaling_json({f}));
    CHECK(js[0]["class"] == "bounded");
    CHECK(js[0]["amplitudes"].size() == 3);
  }
  SUBCASE("indeterminate") {
    SweepTable t = synthetic(eps, 1.5, h, 11, [](double e, double) { return std::pow(e, -0.5); });
    t.sigmas = {1};
    CHECK(fit_scaling(t, 1).cls == ScalingClass::indeterminate);
    CHECK_THROWS_AS(fit_scaling(t, 2), std::invalid_argument);
  }
  SUBCASE("needs three epsilons") {
    const SweepTable t = synthetic({1.0 / 40, 1.0 / 80}, 1.5, h, 11, [](double, double y) { return y; });
    CHECK_THROWS_AS(fit_scaling(t, 0), std::invalid_argument);
  }
}
