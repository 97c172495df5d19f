#include "gbq/model.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <random>
#include <sstream>

#include "gbq/errors.hpp"

namespace gbq {

namespace {

// Distance from a Gaussian centre e^{-k d^2} beyond which it drops below `level`.
double gaussian_radius(double k, double level) { return std::sqrt(-std::log(level) / k); }

double bump(double r2) { return r2 < 1.0 ? std::exp(-r2 / (1.0 - r2)) : 0.0; }

Vec fd_gradient(const ScalarField& f, const Vec& x, const Vec& y, double h) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (f(xp, y) - f(xm, y)) / (2.0 * h);
  }
  return g;
}

Mat fd_jacobian(const GradientField& g, const Vec& x, const Vec& y, double h) {
  const auto n = x.size();
  Mat J(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Vec xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    J.col(j) = (g(xp, y) - g(xm, y)) / (2.0 * h);
  }
  return J;
}

}  // namespace

MediumModel MediumModel::with_fd_derivatives(ScalarField eval, int n, double c_min,
                                             double c_max, bool x_independent) {
  std::cerr << "warning: medium derivatives from finite differences (step 1e-5)\n";
  constexpr double h = 1e-5;
  MediumModel m;
  m.eval = eval;
  m.grad_x = [eval](const Vec& x, const Vec& y) { return fd_gradient(eval, x, y, h); };
  m.hess_x = [eval, n](const Vec& x, const Vec& y) {
    Mat H(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        Vec a = x, b = x, c = x, d = x;
        a(i) += h; a(j) += h;
        b(i) += h; b(j) -= h;
        c(i) -= h; c(j) += h;
        d(i) -= h; d(j) -= h;
        H(i, j) = (eval(a, y) - eval(b, y) - eval(c, y) + eval(d, y)) / (4.0 * h * h);
      }
    }
    return H;
  };
  m.c_min = c_min;
  m.c_max = c_max;
  m.x_independent = x_independent;
  return m;
}

ScenarioPreset preset_1d(PhaseKind1D phase, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("preset_1d: s must be positive");

  ScenarioPreset sc;
  sc.n = 1;
  sc.N = 1;
  sc.name = phase == PhaseKind1D::linear ? "1d-linear" : "1d-quadratic";

  sc.medium.eval = [](const Vec&, const Vec& y) { return y(0); };
  sc.medium.grad_x = [](const Vec&, const Vec&) { return vec({0.0}); };
  sc.medium.hess_x = [](const Vec&, const Vec&) { return Mat::Zero(1, 1).eval(); };
  sc.parameter_box = Box{vec({1.5}), vec({2.0})};
  sc.medium.c_min = 1.5;
  sc.medium.c_max = 2.0;
  sc.medium.x_independent = true;

  auto& d = sc.data;
  d.B0 = [s](const Vec& x, const Vec&) {
    return std::exp(-5.0 * (x(0) + s) * (x(0) + s)) + std::exp(-5.0 * (x(0) - s) * (x(0) - s));
  };
  d.B1 = [](const Vec&, const Vec&) { return 0.0; };
  if (phase == PhaseKind1D::linear) {
    d.phi0 = [](const Vec& x, const Vec&) { return x(0); };
    d.grad_phi0 = [](const Vec&, const Vec&) { return vec({1.0}); };
    d.hess_phi0 = [](const Vec&, const Vec&) { return Mat::Zero(1, 1).eval(); };
  } else {
    d.phi0 = [](const Vec& x, const Vec&) { return x(0) * x(0); };
    d.grad_phi0 = [](const Vec& x, const Vec&) { return vec({2.0 * x(0)}); };
    d.hess_phi0 = [](const Vec&, const Vec&) { return Mat::Constant(1, 1, 2.0).eval(); };
  }
  const double r0 = gaussian_radius(5.0, kAmplitudeTruncation);
  d.support = Box{vec({-s - r0}), vec({s + r0})};

  const double rx = gaussian_radius(5.0, kWindowTruncation);
  sc.window.psi = [](double, const Vec& x) { return std::exp(-5.0 * x(0) * x(0)); };
  sc.window.support = Box{vec({-rx}), vec({rx})};
  sc.window.t_lo = 0.0;
  sc.window.t_hi = 0.0;
  sc.window.time_dependent = false;

  constexpr double t_s = 1.75;
  const double rt = gaussian_radius(300.0, kWindowTruncation);
  sc.window_spacetime.psi = [t_s](double t, const Vec& x) {
    return std::exp(-5.0 * x(0) * x(0) - 300.0 * (t - t_s) * (t - t_s));
  };
  sc.window_spacetime.support = sc.window.support;
  sc.window_spacetime.t_lo = t_s - rt;
  sc.window_spacetime.t_hi = t_s + rt;
  sc.window_spacetime.time_dependent = true;

  sc.default_time = 2.0;
  return sc;
}

ScenarioPreset preset_2d(PhaseKind2D phase) {
  ScenarioPreset sc;
  sc.n = 2;
  sc.N = 2;
  sc.name = phase == PhaseKind2D::abs ? "2d-abs" : "2d-linear";

  sc.medium.eval = [](const Vec&, const Vec& y) { return y(1); };
  sc.medium.grad_x = [](const Vec&, const Vec&) { return vec({0.0, 0.0}); };
  sc.medium.hess_x = [](const Vec&, const Vec&) { return Mat::Zero(2, 2).eval(); };
  sc.parameter_box = Box{vec({0.0, 0.8}), vec({0.5, 1.2})};
  sc.medium.c_min = 0.8;
  sc.medium.c_max = 1.2;
  sc.medium.x_independent = true;

  auto& d = sc.data;
  d.B0 = [](const Vec& x, const Vec& y) {
    const double dx2 = (x(1) - y(0)) * (x(1) - y(0));
    return std::exp(-10.0 * ((x(0) + 1.0) * (x(0) + 1.0) + dx2)) +
           std::exp(-10.0 * ((x(0) - 1.0) * (x(0) - 1.0) + dx2));
  };
  d.B1 = [](const Vec&, const Vec&) { return 0.0; };
  if (phase == PhaseKind2D::abs) {
    d.phi0 = [](const Vec& x, const Vec& y) {
      return std::abs(x(0)) + (x(1) - y(0)) * (x(1) - y(0));
    };
    d.grad_phi0 = [](const Vec& x, const Vec& y) {
      const double sgn = x(0) > 0.0 ? 1.0 : (x(0) < 0.0 ? -1.0 : 0.0);
      return vec({sgn, 2.0 * (x(1) - y(0))});
    };
    sc.launch_margin = 0.05;
  } else {
    d.phi0 = [](const Vec& x, const Vec& y) { return x(0) + (x(1) - y(0)) * (x(1) - y(0)); };
    d.grad_phi0 = [](const Vec& x, const Vec& y) { return vec({1.0, 2.0 * (x(1) - y(0))}); };
  }
  d.hess_phi0 = [](const Vec&, const Vec&) {
    Mat H = Mat::Zero(2, 2);
    H(1, 1) = 2.0;
    return H;
  };
  const double r0 = gaussian_radius(10.0, kAmplitudeTruncation);
  d.support = Box{vec({-1.0 - r0, 0.0 - r0}), vec({1.0 + r0, 0.5 + r0})};

  sc.window.psi = [](double, const Vec& x) { return bump(x.squaredNorm()); };
  sc.window.support = Box{vec({-1.0, -1.0}), vec({1.0, 1.0})};
  sc.window.time_dependent = false;

  sc.window_spacetime.psi = [](double t, const Vec& x) {
    const double r2 = x.squaredNorm();
    const double dt2 = (t - 1.0) * (t - 1.0);
    if (r2 >= 1.0 || dt2 >= 0.04) return 0.0;
    return std::exp(-r2 / (1.0 - r2) - 10.0 * dt2 / (0.04 - dt2));
  };
  sc.window_spacetime.support = sc.window.support;
  sc.window_spacetime.t_lo = 0.8;
  sc.window_spacetime.t_hi = 1.2;
  sc.window_spacetime.time_dependent = true;

  sc.default_time = 1.0;
  sc.diagonal = DiagonalPath{vec({0.0, 0.8}), vec({0.5, 0.4})};
  return sc;
}

std::vector<std::string> preset_names() {
  return {"1d-linear", "1d-quadratic", "2d-abs", "2d-linear"};
}

ScenarioPreset preset_by_name(const std::string& name, double s) {
  if (name == "1d-linear") return preset_1d(PhaseKind1D::linear, s);
  if (name == "1d-quadratic") return preset_1d(PhaseKind1D::quadratic, s);
  if (name == "2d-abs") return preset_2d(PhaseKind2D::abs);
  if (name == "2d-linear") return preset_2d(PhaseKind2D::linear);
  throw std::invalid_argument("unknown scenario preset '" + name + "'");
}

// ---------------------------------------------------------------------------
// Launch grid

double LaunchGrid::total_weight() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

LaunchGrid make_launch_grid(const Box& k0, double max_spacing) {
  if (!(max_spacing > 0.0)) throw std::invalid_argument("launch spacing must be positive");
  const int n = k0.dim();
  LaunchGrid g;
  g.counts.resize(n);
  g.spacing.resize(n);
  for (int a = 0; a < n; ++a) {
    const double len = k0.hi(a) - k0.lo(a);
    const int intervals = std::max(1, static_cast<int>(std::ceil(len / max_spacing - 1e-12)));
    g.counts[a] = intervals + 1;
    g.spacing(a) = len / intervals;
  }
  std::vector<int> idx(n, 0);
  for (;;) {
    Vec z(n);
    double w = 1.0;
    for (int a = 0; a < n; ++a) {
      z(a) = k0.lo(a) + idx[a] * g.spacing(a);
      const bool end = idx[a] == 0 || idx[a] == g.counts[a] - 1;
      w *= g.spacing(a) * (end ? 0.5 : 1.0);
    }
    g.points.push_back(z);
    g.weights.push_back(w);
    int a = 0;
    while (a < n && ++idx[a] == g.counts[a]) idx[a++] = 0;
    if (a == n) break;
  }
  return g;
}

std::vector<int> active_launch_points(const ScenarioPreset& s, const LaunchGrid& grid) {
  // sup over Gamma_c is taken on a 9^N lattice.
  constexpr int kPerAxis = 9;
  std::vector<Vec> ys;
  {
    std::vector<int> idx(s.N, 0);
    for (;;) {
      Vec y(s.N);
      for (int a = 0; a < s.N; ++a) {
        y(a) = s.parameter_box.lo(a) +
               (s.parameter_box.hi(a) - s.parameter_box.lo(a)) * idx[a] / (kPerAxis - 1.0);
      }
      ys.push_back(y);
      int a = 0;
      while (a < s.N && ++idx[a] == kPerAxis) idx[a++] = 0;
      if (a == s.N) break;
    }
  }
  std::vector<int> active;
  for (int j = 0; j < static_cast<int>(grid.points.size()); ++j) {
    const Vec& z = grid.points[j];
    if (s.launch_margin > 0.0 && std::abs(z(0)) < s.launch_margin) continue;
    double sup = 0.0;
    for (const auto& y : ys) {
      sup = std::max({sup, std::abs(s.data.B0(z, y)), std::abs(s.data.B1(z, y))});
    }
    if (sup >= kAmplitudeTruncation) active.push_back(j);
  }
  return active;
}

// ---------------------------------------------------------------------------
// Validation

void ValidationReport::throw_if_failed() const {
  for (const auto& c : checks) {
    if (c.pass) continue;
    std::ostringstream os;
    os << c.assumption << " violated (worst deviation " << c.worst << ") at x=("
       << c.witness_x.transpose() << "), y=(" << c.witness_y.transpose() << ")";
    throw ValidationFailure(os.str());
  }
}

namespace {

struct CheckAccumulator {
  ValidationCheck check;
  double tolerance;

  CheckAccumulator(std::string name, double tol) : tolerance(tol) {
    check.assumption = std::move(name);
  }
  void record(double deviation, const Vec& x, const Vec& y) {
    if (std::isnan(deviation)) deviation = kInf;
    if (check.witness_x.size() == 0 || deviation > check.worst) {
      check.worst = deviation;
      check.witness_x = x;
      check.witness_y = y;
    }
    if (deviation > tolerance) check.pass = false;
  }
};

double rel_dev(const Mat& a, const Mat& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

}  // namespace

ValidationReport validate_scenario(const ScenarioPreset& s, int samples, double launch_spacing) {
  if (samples < 1) throw std::invalid_argument("validate_scenario: samples must be >= 1");
  constexpr double kFdStep = 1e-4;
  constexpr double kFdTol = 1e-5;

  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](const Box& b) {
    Vec v(b.dim());
    for (int a = 0; a < b.dim(); ++a) v(a) = b.lo(a) + (b.hi(a) - b.lo(a)) * unit(rng);
    return v;
  };

  Box xbox = s.data.support;
  for (int a = 0; a < s.n; ++a) {
    xbox.lo(a) = std::min(xbox.lo(a), s.window.support.lo(a));
    xbox.hi(a) = std::max(xbox.hi(a), s.window.support.hi(a));
  }

  CheckAccumulator speed("A1 speed bounds", 0.0);
  CheckAccumulator cgrad("A1 speed gradient consistency", kFdTol);
  CheckAccumulator chess("A1 speed Hessian consistency", kFdTol);
  CheckAccumulator pgrad("A3 phase gradient consistency", kFdTol);
  CheckAccumulator phess("A3 phase Hessian consistency", kFdTol);
  CheckAccumulator nonstat("A3 nonzero phase gradient on launch grid", 0.0);
  CheckAccumulator amp("A2 amplitude truncation outside K0", 0.0);
  CheckAccumulator win("A6 window vanishes outside support", 0.0);

  if (!(s.medium.c_min > 0.0)) {
    speed.record(-s.medium.c_min, Vec::Zero(s.n), s.parameter_box.lo);
    speed.check.pass = false;
  }

  auto check_phase_derivs = [&](const Vec& x, const Vec& y) {
    const Vec g = s.data.grad_phi0(x, y);
    pgrad.record(rel_dev(g, fd_gradient(s.data.phi0, x, y, kFdStep)), x, y);
    phess.record(rel_dev(s.data.hess_phi0(x, y), fd_jacobian(s.data.grad_phi0, x, y, kFdStep)),
                 x, y);
  };

  for (int k = 0; k < samples; ++k) {
    const Vec x = draw(xbox);
    const Vec y = draw(s.parameter_box);
    const double c = s.medium.eval(x, y);
    double dev = 0.0;
    if (!(c > 0.0)) dev = std::max(dev, -c + 1.0);
    dev = std::max({dev, s.medium.c_min - c, c - s.medium.c_max});
    speed.record(dev, x, y);
    cgrad.record(rel_dev(s.medium.grad_x(x, y), fd_gradient(s.medium.eval, x, y, kFdStep)), x, y);
    chess.record(rel_dev(s.medium.hess_x(x, y), fd_jacobian(s.medium.grad_x, x, y, kFdStep)), x,
                 y);
    check_phase_derivs(x, y);

    // Shell points just outside K0 and K1.
    Vec xo(s.n);
    for (int a = 0; a < s.n; ++a) {
      const double width = s.data.support.hi(a) - s.data.support.lo(a);
      xo(a) = x(a);
      if (a == k % s.n) {
        xo(a) = unit(rng) < 0.5 ? s.data.support.lo(a) - 0.25 * width * unit(rng) - 1e-9
                                : s.data.support.hi(a) + 0.25 * width * unit(rng) + 1e-9;
      }
    }
    const double tail = std::max(std::abs(s.data.B0(xo, y)), std::abs(s.data.B1(xo, y)));
    amp.record(tail - kAmplitudeTruncation * (1.0 + 1e-6), xo, y);

    for (const WindowFunction* w : {&s.window, &s.window_spacetime}) {
      if (!w->psi) continue;
      Vec xw(s.n);
      for (int a = 0; a < s.n; ++a) {
        const double width = w->support.hi(a) - w->support.lo(a);
        xw(a) = w->support.lo(a) + width * unit(rng);
        if (a == k % s.n) {
          xw(a) = unit(rng) < 0.5 ? w->support.lo(a) - 0.5 * width * unit(rng) - 1e-9
                                  : w->support.hi(a) + 0.5 * width * unit(rng) + 1e-9;
        }
      }
      const double t = w->time_dependent ? w->t_lo + (w->t_hi - w->t_lo) * unit(rng) : 0.0;
      win.record(w->psi(t, xw) - kWindowTruncation, xw, y);
      if (w->time_dependent) {
        const Vec xin = draw(w->support);
        const double tout = unit(rng) < 0.5 ? w->t_lo - 0.5 * unit(rng) - 1e-9
                                            : w->t_hi + 0.5 * unit(rng) + 1e-9;
        win.record(w->psi(tout, xin) - kWindowTruncation, xin, y);
      }
    }
  }

  // Launch grid: phase gradient nonzero and smooth at every active beam start.
  const LaunchGrid grid = make_launch_grid(s.data.support, launch_spacing);
  const auto active = active_launch_points(s, grid);
  const int ny = std::max(1, std::min(samples, 3));
  for (int k = 0; k < ny; ++k) {
    const Vec y = k == 0 ? s.parameter_box.lo : draw(s.parameter_box);
    for (int j : active) {
      const Vec& z = grid.points[j];
      const double gnorm = s.data.grad_phi0(z, y).norm();
      nonstat.record(gnorm > 1e-12 ? 0.0 : 1.0, z, y);
      check_phase_derivs(z, y);
    }
  }

  ValidationReport rep;
  for (auto* acc : {&speed, &cgrad, &chess, &pgrad, &phess, &nonstat, &amp, &win}) {
    rep.pass = rep.pass && acc->check.pass;
    rep.checks.push_back(acc->check);
  }
  return rep;
}

}  // namespace gbq
