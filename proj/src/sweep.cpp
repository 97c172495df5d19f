#include "gbq/sweep.hpp"

#include <cctype>
#include <istream>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "gbq/csv.hpp"
#include "gbq/errors.hpp"

namespace gbq {

void SweepPlan::validate() const {
  if (!scenario) throw InvalidPlan("no scenario");
  if (epsilons.empty()) throw InvalidPlan("empty epsilon list");
  for (double e : epsilons)
    if (!(e > 0.0 && e <= 1.0)) throw InvalidPlan("epsilon " + std::to_string(e) + " outside (0, 1]");
  if (counts.empty()) throw InvalidPlan("no grid counts");
  for (int c : counts)
    if (c < 1) throw InvalidPlan("grid count < 1");
  if (diagonal) {
    if (!scenario->diagonal) throw InvalidPlan("scenario '" + scenario->name + "' has no diagonal path");
    if (counts.size() != 1) throw InvalidPlan("a diagonal plan takes one count");
  } else if (static_cast<int>(counts.size()) != scenario->N) {
    throw InvalidPlan("need one grid count per parameter axis");
  }
  if (axis < 0 || axis >= scenario->N) throw InvalidPlan("derivative axis out of range");
  if (sigmas.empty()) throw InvalidPlan("empty sigma list");
  for (int s : sigmas)
    if (s < 0) throw InvalidPlan("negative sigma");
  if (!(h_y > 0.0) && !(h_y_eps > 0.0)) throw InvalidPlan("h_y must be positive");
  if (!(z_factor > 0.0)) throw InvalidPlan("z_factor must be positive");
  const bool derivs = std::any_of(sigmas.begin(), sigmas.end(), [](int s) { return s > 0; });
  if (derivs && source == StencilSource::table && !diagonal && scenario->N != 1)
    throw InvalidPlan("table differences need a one-axis grid");
  const Box b = box.value_or(scenario->parameter_box);
  if ((b.lo.array() < scenario->parameter_box.lo.array() - 1e-12).any() ||
      (b.hi.array() > scenario->parameter_box.hi.array() + 1e-12).any())
    throw InvalidPlan("sweep box leaves the parameter domain");
}

int SweepPlan::cell_count() const {
  int c = 1;
  for (int k : counts) c *= k;
  return c;
}

Vec SweepPlan::cell_point(int i, double* r) const {
  auto frac = [](int k, int n) { return n == 1 ? 0.5 : static_cast<double>(k) / (n - 1); };
  if (diagonal) {
    const double rr = frac(i, counts[0]);
    if (r) *r = rr;
    return scenario->diagonal->at(rr);
  }
  const Box b = box.value_or(scenario->parameter_box);
  Vec y(scenario->N);
  for (int a = 0; a < scenario->N; ++a) {
    const int k = i % counts[a];
    i /= counts[a];
    y(a) = b.lo(a) + (b.hi(a) - b.lo(a)) * frac(k, counts[a]);
  }
  if (r) *r = std::nan("");
  return y;
}

Vec SweepPlan::derivative_direction() const {
  if (diagonal) return scenario->diagonal->direction;
  Vec d = Vec::Zero(scenario->N);
  d(axis) = 1.0;
  return d;
}

double SweepPlan::step(double epsilon) const { return h_y_eps > 0.0 ? h_y_eps * epsilon : h_y; }

double SweepPlan::qoi_time() const { return t >= 0.0 ? t : scenario->default_time; }

double SweepPlan::horizon(const QoISpec& q) const {
  if (T > 0.0) return T;
  if (q.kind == QoIKind::space) return qoi_time();
  const WindowFunction& w = q.window ? *q.window : scenario->window_spacetime;
  return w.t_hi;
}

std::vector<double> central_stencil(int sigma) {
  // sigma = 2k: (second difference)^k; sigma = 2k+1: first difference after that.
  std::vector<double> c{1.0};
  auto convolve = [&](const std::vector<double>& s) {
    std::vector<double> out(c.size() + s.size() - 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = 0; j < s.size(); ++j) out[i + j] += c[i] * s[j];
    c = out;
  };
  for (int k = 0; k < sigma / 2; ++k) convolve({1.0, -2.0, 1.0});
  if (sigma % 2) convolve({-0.5, 0.0, 0.5});
  return c;
}

namespace {

int half_width(int sigma) { return static_cast<int>(central_stencil(sigma).size() / 2); }

double apply_stencil(int sigma, const std::vector<double>& f, int centre, double h) {
  const std::vector<double> c = central_stencil(sigma);
  const int m = static_cast<int>(c.size() / 2);
  double acc = 0.0;
  for (int k = -m; k <= m; ++k) acc += c[k + m] * f[centre + k];
  return acc / std::pow(h, sigma);
}

std::string describe(const Vec& y) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index i = 0; i < y.size(); ++i) os << (i ? ", " : "") << y(i);
  os << ")";
  return os.str();
}

std::vector<double> evaluate_cell(const SweepPlan& plan, const std::vector<QoISpec>& qois, double eps,
                                  const Vec& y) {
  double T = 0.0;
  for (const QoISpec& q : qois) T = std::max(T, plan.horizon(q));
  auto fan = std::make_shared<const BeamFan>(
      build_fan(*plan.scenario, y, T, plan.z_factor * std::sqrt(eps), plan.modes));
  const FieldSpec fs = make_field_spec(plan.scenario, fan, eps, plan.modes, plan.cutoff);
  std::vector<double> out;
  for (const QoISpec& q : qois) out.push_back(evaluate_qoi(fs, q, y, plan.qoi_time()).value);
  return out;
}

}  // namespace

SweepTable run_sweep(const SweepPlan& plan) { return run_sweeps(plan, {plan.qoi}).front(); }

std::vector<SweepTable> run_sweeps(const SweepPlan& plan, const std::vector<QoISpec>& qois) {
  plan.validate();
  if (qois.empty()) throw InvalidPlan("no QoI to evaluate");
  const auto start = std::chrono::steady_clock::now();
  const int cells = plan.cell_count();
  const int nq = static_cast<int>(qois.size());
  const bool table_diff = plan.source == StencilSource::table;
  int m = 0;
  if (!table_diff)
    for (int s : plan.sigmas) m = std::max(m, half_width(s));
  const std::size_t ns = plan.sigmas.size();

  std::vector<SweepTable> tabs(nq);
  const int ne = static_cast<int>(plan.epsilons.size());
  for (int q = 0; q < nq; ++q) {
    SweepTable& tab = tabs[q];
    tab.scenario = plan.scenario->name;
    tab.qoi = to_string(qois[q].kind);
    tab.N = plan.scenario->N;
    tab.diagonal = plan.diagonal;
    tab.sigmas = plan.sigmas;
    tab.epsilons = plan.epsilons;
    tab.rows.resize(static_cast<std::size_t>(ne) * cells);
  }
  const Vec dir = plan.derivative_direction();
  // raw[q][job]: undifferentiated value at the cell centre
  std::vector<std::vector<double>> raw(nq, std::vector<double>(static_cast<std::size_t>(ne) * cells, std::nan("")));

  const int jobs = ne * cells;
  auto run_job = [&](int job) {
    const int ie = job / cells, ic = job % cells;
    const double eps = plan.epsilons[ie];
    double r = std::nan("");
    const Vec y = plan.cell_point(ic, &r);
    std::string error;
    std::vector<std::vector<double>> f(nq, std::vector<double>(2 * m + 1));
    const double h = plan.step(eps);
    try {
      for (int k = -m; k <= m; ++k) {
        const std::vector<double> v = evaluate_cell(plan, qois, eps, Vec(y + k * h * dir));
        for (int q = 0; q < nq; ++q) f[q][k + m] = v[q];
      }
    } catch (const Error& e) {
      error = e.kind() + ": " + e.what();
    } catch (const std::exception& e) {
      error = e.what();
    }
    for (int q = 0; q < nq; ++q) {
      SweepRow& row = tabs[q].rows[job];
      row.epsilon = eps;
      row.cell = ic;
      row.r = r;
      row.y = y;
      row.error = error;
      row.values.assign(ns, std::nan(""));
      if (!error.empty()) continue;
      raw[q][job] = f[q][m];
      for (std::size_t s = 0; s < ns; ++s) {
        const int sg = plan.sigmas[s];
        if (sg == 0) row.values[s] = f[q][m];
        else if (!table_diff) row.values[s] = apply_stencil(sg, f[q], m, h);
      }
    }
  };
  if (plan.workers > 0) {
#pragma omp parallel for num_threads(plan.workers) schedule(dynamic, 1)
    for (int j = 0; j < jobs; ++j) run_job(j);
  } else {
    for (int j = 0; j < jobs; ++j) run_job(j);
  }

  if (table_diff && cells > 1) {
    const double h = (plan.cell_point(1) - plan.cell_point(0)).norm() / dir.norm();
    for (int q = 0; q < nq; ++q)
      for (int ie = 0; ie < ne; ++ie) {
        const std::vector<double> f(raw[q].begin() + ie * cells, raw[q].begin() + (ie + 1) * cells);
        for (std::size_t s = 0; s < ns; ++s) {
          const int sg = plan.sigmas[s];
          if (sg == 0) continue;
          const int w = half_width(sg);
          for (int ic = w; ic < cells - w; ++ic)
            tabs[q].rows[ie * cells + ic].values[s] = apply_stencil(sg, f, ic, h);
        }
      }
  }

  int failed = 0;
  std::vector<std::string> failures;
  for (const SweepRow& row : tabs[0].rows) {
    if (row.error.empty()) continue;
    ++failed;
    std::ostringstream os;
    os << "eps=" << row.epsilon << " cell=" << row.cell << " y=" << describe(row.y) << ": " << row.error;
    failures.push_back(os.str());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (SweepTable& t : tabs) {
    t.failures = failures;
    t.seconds = secs;
  }
  if (failed > plan.max_failure_fraction * jobs) {
    std::ostringstream os;
    os << failed << " of " << jobs << " cells failed";
    for (std::size_t i = 0; i < std::min<std::size_t>(3, failures.size()); ++i) os << "; " << failures[i];
    throw SweepFailed(os.str());
  }
  return tabs;
}

SweepTable read_sweep_table(std::istream& is) {
  const CsvTable csv = read_csv(is);
  SweepTable t;
  const int ce = csv.column("epsilon"), cc = csv.column("cell"), cr = csv.column("r"), cs = csv.column("status");
  if (ce < 0 || cc < 0) throw std::invalid_argument("sweep table needs 'epsilon' and 'cell' columns");
  t.diagonal = cr >= 0;
  std::vector<int> ycols, dcols;
  for (std::size_t i = 0; i < csv.header.size(); ++i) {
    const std::string& h = csv.header[i];
    if (h.size() > 1 && h[0] == 'y' && std::isdigit(static_cast<unsigned char>(h[1]))) ycols.push_back(static_cast<int>(i));
    if (h.size() > 1 && h[0] == 'd' && std::isdigit(static_cast<unsigned char>(h[1]))) {
      dcols.push_back(static_cast<int>(i));
      t.sigmas.push_back(std::stoi(h.substr(1)));
    }
  }
  t.N = static_cast<int>(ycols.size());
  auto num = [](const std::string& s) { return s == "nan" ? std::nan("") : std::stod(s); };
  for (const auto& cells : csv.rows) {
    SweepRow r;
    r.epsilon = num(cells[ce]);
    r.cell = std::stoi(cells[cc]);
    if (cr >= 0) r.r = num(cells[cr]);
    r.y = Vec(t.N);
    for (int a = 0; a < t.N; ++a) r.y(a) = num(cells[ycols[a]]);
    for (int c : dcols) r.values.push_back(num(cells[c]));
    if (cs >= 0 && cells[cs] != "ok") r.error = cells[cs];
    if (std::find(t.epsilons.begin(), t.epsilons.end(), r.epsilon) == t.epsilons.end()) t.epsilons.push_back(r.epsilon);
    t.rows.push_back(std::move(r));
  }
  return t;
}

std::vector<double> SweepTable::series(double epsilon, int k) const {
  std::vector<double> out;
  for (const SweepRow& r : rows)
    if (r.epsilon == epsilon) out.push_back(r.values[k]);
  return out;
}

std::vector<double> SweepTable::coordinate(double epsilon) const {
  std::vector<double> out;
  for (const SweepRow& r : rows)
    if (r.epsilon == epsilon) out.push_back(diagonal ? r.r : r.y(0));
  return out;
}

void SweepTable::write_csv(std::ostream& os) const {
  CsvWriter w(os);
  std::vector<std::string> head{"epsilon", "cell"};
  if (diagonal) head.push_back("r");
  for (int a = 0; a < N; ++a) head.push_back("y" + std::to_string(a + 1));
  for (int s : sigmas) head.push_back("d" + std::to_string(s));
  head.push_back("status");
  w.header(head);
  for (const SweepRow& r : rows) {
    std::vector<CsvCell> cells{r.epsilon, static_cast<long long>(r.cell)};
    if (diagonal) cells.emplace_back(r.r);
    for (int a = 0; a < N; ++a) cells.emplace_back(r.y(a));
    for (double v : r.values) cells.emplace_back(v);
    cells.emplace_back(r.error.empty() ? std::string("ok") : std::string("failed"));
    w.row(cells);
  }
}

SweepTable fd_derivative(const SweepTable& table, int sigma, double h) {
  if (sigma < 0) throw StencilOutOfDomain("negative sigma");
  if (!(h > 0.0)) throw StencilOutOfDomain("step must be positive");
  if (!table.diagonal && table.N != 1) throw StencilOutOfDomain("differences need a one-axis table");
  const auto k0 = std::find(table.sigmas.begin(), table.sigmas.end(), 0);
  if (k0 == table.sigmas.end()) throw StencilOutOfDomain("table has no sigma = 0 column");
  const int k = static_cast<int>(k0 - table.sigmas.begin());
  const int w = half_width(sigma);

  SweepTable out = table;
  out.sigmas = {sigma};
  out.rows.clear();
  for (double eps : table.epsilons) {
    std::vector<const SweepRow*> rows;
    for (const SweepRow& r : table.rows)
      if (r.epsilon == eps) rows.push_back(&r);
    const int n = static_cast<int>(rows.size());
    if (n < 2 * w + 1) {
      std::ostringstream os;
      os << "sigma=" << sigma << " needs " << 2 * w + 1 << " cells, eps=" << eps << " has " << n;
      throw StencilOutOfDomain(os.str());
    }
    for (int i = 1; i < n; ++i) {
      const double gap = table.diagonal ? rows[i]->r - rows[i - 1]->r : rows[i]->y(0) - rows[i - 1]->y(0);
      if (std::abs(gap - h) > 1e-9 * std::max(1.0, h)) {
        std::ostringstream os;
        os << "grid spacing " << gap << " does not match h=" << h;
        throw StencilOutOfDomain(os.str());
      }
    }
    std::vector<double> f(n);
    for (int i = 0; i < n; ++i) f[i] = rows[i]->values[k];
    for (int i = w; i < n - w; ++i) {
      SweepRow r = *rows[i];
      r.values = {apply_stencil(sigma, f, i, h)};
      out.rows.push_back(std::move(r));
    }
  }
  return out;
}

const char* to_string(ScalingClass c) {
  switch (c) {
    case ScalingClass::bounded: return "bounded";
    case ScalingClass::oscillatory: return "oscillatory";
    case ScalingClass::indeterminate: return "indeterminate";
  }
  return "?";
}

ScalingFit fit_scaling(const SweepTable& table, int sigma) {
  const auto it = std::find(table.sigmas.begin(), table.sigmas.end(), sigma);
  if (it == table.sigmas.end()) throw std::invalid_argument("table has no column for sigma " + std::to_string(sigma));
  const int k = static_cast<int>(it - table.sigmas.begin());
  ScalingFit fit;
  fit.sigma = sigma;
  fit.epsilons = table.epsilons;
  std::sort(fit.epsilons.begin(), fit.epsilons.end(), std::greater<>());
  if (fit.epsilons.size() < 3) throw std::invalid_argument("scaling fit needs at least 3 epsilon values");
  for (double eps : fit.epsilons) {
    double a = 0.0;
    for (double v : table.series(eps, k))
      if (std::isfinite(v)) a = std::max(a, std::abs(v));
    fit.amplitudes.push_back(a);
  }
  for (std::size_t i = 1; i < fit.amplitudes.size(); ++i)
    fit.ratios.push_back(fit.amplitudes[i] / fit.amplitudes[i - 1]);

  const std::size_t n = fit.epsilons.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(fit.epsilons[i]), y = std::log(fit.amplitudes[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.rho = -slope;
  const double unit = std::max(1, std::abs(sigma));
  if (fit.rho <= 0.3 * unit) fit.cls = ScalingClass::bounded;
  else if (sigma != 0 && fit.rho >= 0.7 * std::abs(sigma)) fit.cls = ScalingClass::oscillatory;
  else fit.cls = ScalingClass::indeterminate;
  return fit;
}

std::string scaling_json(const std::vector<ScalingFit>& fits) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const ScalingFit& f : fits) {
    nlohmann::ordered_json j;
    j["sigma"] = f.sigma;
    j["epsilons"] = f.epsilons;
    j["amplitudes"] = f.amplitudes;
    j["ratios"] = f.ratios;
    j["rho"] = f.rho;
    j["class"] = to_string(f.cls);
    arr.push_back(j);
  }
  return arr.dump(2);
}

}  // namespace gbq
