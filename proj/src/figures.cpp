#include "gbq/figures.hpp"

#include <cmath>
#include <sstream>

#include "gbq/csv.hpp"
#include "gbq/errors.hpp"
#include "gbq/exact.hpp"

namespace gbq {

void ArtifactBundle::add(std::string file, std::string role, std::string content) {
  files.push_back({std::move(file), std::move(role), std::move(content)});
}

std::vector<std::string> figure_ids() { return {"fig1", "fig2", "fig3", "fig4", "fig5"}; }

std::string epsilon_label(double eps) {
  const double inv = 1.0 / eps;
  if (std::abs(inv - std::round(inv)) < 1e-9 * inv) return "1/" + std::to_string(std::lround(inv));
  return format_double(eps);
}

std::string panel_csv(const SweepTable& t, int k, const std::string& coord) {
  std::ostringstream os;
  CsvWriter w(os);
  std::vector<std::string> head{coord};
  for (double e : t.epsilons) head.push_back("eps=" + epsilon_label(e));
  w.header(head);
  // Rows are keyed by cell; every epsilon shares the grid.
  const std::vector<double> x = t.coordinate(t.epsilons.front());
  std::vector<std::vector<double>> cols;
  for (double e : t.epsilons) cols.push_back(t.series(e, k));
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<double> row{x[i]};
    for (const auto& c : cols) row.push_back(c[i]);
    w.row(row);
  }
  return os.str();
}

namespace {

using json = nlohmann::ordered_json;

std::string table_csv(const SweepTable& t) {
  std::ostringstream os;
  t.write_csv(os);
  return os.str();
}

std::vector<double> pick(const std::vector<double>& given, std::vector<double> fallback) {
  return given.empty() ? fallback : given;
}

QoISpec qoi_spec(QoIKind kind, const FigureOptions& opt, double resolution, double hx_eps, double ht_eps) {
  QoISpec q;
  q.kind = kind;
  q.resolution = opt.resolution.value_or(resolution);
  q.h_x_eps = opt.h_x_eps.value_or(hx_eps);
  q.h_t_eps = opt.h_t_eps.value_or(ht_eps);
  return q;
}

json panel(const std::string& file, int row, int col, const std::string& title, const std::string& x,
           const std::vector<double>& eps, const std::string& ylabel) {
  json p;
  p["file"] = file;
  p["row"] = row;
  p["col"] = col;
  p["kind"] = "lines";
  p["title"] = title;
  p["x"] = x;
  json series = json::array();
  for (double e : eps) series.push_back("eps=" + epsilon_label(e));
  p["series"] = series;
  p["ylabel"] = ylabel;
  return p;
}

// Three columns of sweep tables laid out as rows sigma = 0, 1, 2.
ArtifactBundle grid_bundle(const std::string& id, const std::vector<SweepTable>& tabs,
                           const std::vector<std::string>& titles, const std::string& coord) {
  ArtifactBundle b;
  b.manifest["figure"] = id;
  b.manifest["grid"] = {{"rows", 3}, {"cols", static_cast<int>(tabs.size())}};
  json panels = json::array();
  std::vector<ScalingFit> fits;
  const char* deriv[] = {"", "d/d" , "d2/d"};
  for (std::size_t c = 0; c < tabs.size(); ++c) {
    const std::string tfile = id + "_col" + std::to_string(c) + "_table.csv";
    b.add(tfile, "table", table_csv(tabs[c]));
    for (int s = 0; s < 3; ++s) {
      const std::string file = id + "_r" + std::to_string(s) + "_c" + std::to_string(c) + ".csv";
      b.add(file, "panel", panel_csv(tabs[c], s, coord));
      const std::string lab = s == 0 ? titles[c] : std::string(deriv[s]) + coord + " " + titles[c];
      panels.push_back(panel(file, s, static_cast<int>(c), lab, coord, tabs[c].epsilons,
                             s == 0 ? "Q" : (s == 1 ? "dQ/d" + coord : "d2Q/d" + coord + "2")));
      if (tabs[c].epsilons.size() >= 3) fits.push_back(fit_scaling(tabs[c], s));
    }
  }
  b.manifest["panels"] = panels;
  if (!fits.empty()) {
    json cols = json::array();
    for (std::size_t c = 0; c < tabs.size(); ++c) {
      json col;
      col["column"] = static_cast<int>(c);
      col["title"] = titles[c];
      col["fits"] = json::parse(scaling_json({fits.begin() + 3 * c, fits.begin() + 3 * c + 3}));
      cols.push_back(col);
    }
    b.add(id + "_fits.json", "fit", cols.dump(2) + "\n");
  }
  return b;
}

ArtifactBundle figure1(const FigureOptions& opt) {
  auto s = std::make_shared<const ScenarioPreset>(preset_1d(PhaseKind1D::linear, 1.5));
  const double eps = pick(opt.epsilons, {1.0 / 40}).front();
  const DAlembertField f = make_dalembert(s, vec({2.0}), eps);
  const std::vector<double> times{0.0, 0.375, 0.75};
  ArtifactBundle b;
  b.manifest["figure"] = "fig1";
  b.manifest["grid"] = {{"rows", 1}, {"cols", 3}};
  json panels = json::array();
  const double lo = -5.0, hi = 5.0;
  const int m = static_cast<int>(std::ceil((hi - lo) / (kExactStepFactor * eps)));
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::ostringstream os;
    CsvWriter w(os);
    w.header({"x", "re_u", "im_u", "abs_u"});
    for (int i = 0; i <= m; ++i) {
      const double x = lo + (hi - lo) * i / m;
      const cplx u = eval_dalembert(f, times[k], x);
      w.row(std::vector<double>{x, u.real(), u.imag(), std::abs(u)});
    }
    const std::string file = "fig1_t" + std::to_string(k) + ".csv";
    b.add(file, "panel", os.str());
    json p;
    p["file"] = file;
    p["row"] = 0;
    p["col"] = static_cast<int>(k);
    p["kind"] = "lines";
    p["title"] = "t=" + format_double(times[k]);
    p["x"] = "x";
    p["series"] = json::array({"re_u", "abs_u"});
    p["ylabel"] = "u";
    panels.push_back(p);
  }
  b.manifest["panels"] = panels;
  b.manifest["parameters"] = {{"s", 1.5}, {"c", 2.0}, {"epsilon", eps}};
  return b;
}

ArtifactBundle snapshots(const std::string& id, PhaseKind2D phase, std::vector<Mode> modes,
                         const FigureOptions& opt) {
  auto s = std::make_shared<const ScenarioPreset>(preset_2d(phase));
  const double eps = pick(opt.epsilons, {1.0 / 60}).front();
  const double t = 1.0;
  const std::vector<double> rs{0.0, 0.5, 1.0};
  ArtifactBundle b;
  b.manifest["figure"] = id;
  b.manifest["grid"] = {{"rows", 1}, {"cols", 3}};
  json panels = json::array();
  const Box box{vec({-2.0, -2.0}), vec({2.0, 2.0})};
  for (std::size_t k = 0; k < rs.size(); ++k) {
    const Vec y = s->diagonal->at(rs[k]);
    auto fan = std::make_shared<const BeamFan>(build_fan(*s, y, t, opt.z_factor * std::sqrt(eps), modes));
    const FieldSpec fs = make_field_spec(s, fan, eps, modes);
    std::ostringstream os;
    write_field_snapshot(os, fs, t, box, {opt.snapshot_points, opt.snapshot_points});
    const std::string file = id + "_y" + std::to_string(k) + ".csv";
    b.add(file, "snapshot", os.str());
    json p;
    p["file"] = file;
    p["row"] = 0;
    p["col"] = static_cast<int>(k);
    p["kind"] = "heatmap";
    std::ostringstream title;
    title << "y=(" << format_double(y(0)) << ", " << format_double(y(1)) << ")";
    p["title"] = title.str();
    p["x"] = "x1";
    p["y"] = "x2";
    p["value"] = "abs_u";
    p["overlay"] = "unit_circle";
    panels.push_back(p);
  }
  b.manifest["panels"] = panels;
  json modes_j = json::array();
  for (Mode m : modes) modes_j.push_back(to_string(m));
  b.manifest["parameters"] = {{"epsilon", eps}, {"t", t}, {"modes", modes_j}};
  return b;
}

}  // namespace

std::vector<SweepTable> figure2_tables(const FigureOptions& opt) {
  SweepPlan base;
  base.epsilons = pick(opt.epsilons, {1.0 / 40, 1.0 / 80, 1.0 / 160});
  base.counts = {opt.points};
  base.sigmas = {0, 1, 2};
  base.t = 2.0;
  base.z_factor = opt.z_factor;
  base.workers = opt.workers;
  base.source = opt.source.value_or(StencilSource::cell);

  std::vector<SweepTable> out;
  // Oscillatory column: the step has to resolve the eps-scale oscillation in y.
  SweepPlan p = base;
  p.scenario = std::make_shared<const ScenarioPreset>(preset_1d(PhaseKind1D::linear, 3.0));
  p.qoi = qoi_spec(QoIKind::space, opt, 8.0, 0.0, 0.0);
  p.h_y_eps = 1.0 / 50;
  out.push_back(run_sweep(p));

  p = base;
  p.scenario = std::make_shared<const ScenarioPreset>(preset_1d(PhaseKind1D::quadratic, 3.0));
  p.qoi = qoi_spec(QoIKind::space, opt, 8.0, 0.0, 0.0);
  p.h_y = 1e-3;
  out.push_back(run_sweep(p));

  p = base;
  p.scenario = std::make_shared<const ScenarioPreset>(preset_1d(PhaseKind1D::linear, 3.0));
  p.qoi = qoi_spec(QoIKind::spacetime, opt, 8.0, 0.0, 0.0);
  p.h_y = 1e-3;
  out.push_back(run_sweep(p));
  return out;
}

std::vector<SweepTable> figure4_tables(const FigureOptions& opt) {
  SweepPlan base;
  base.epsilons = pick(opt.epsilons, {1.0 / 30, 1.0 / 60, 1.0 / 120});
  base.counts = {opt.points};
  base.diagonal = true;
  base.sigmas = {0, 1, 2};
  base.t = 1.0;
  base.z_factor = opt.z_factor;
  base.workers = opt.workers;
  base.source = opt.source.value_or(StencilSource::table);
  // Spectrally accurate spacings, see README: h_x = eps, h_t = eps / 1.5.
  const QoISpec space = qoi_spec(QoIKind::space, opt, 1.0, 1.0, 2.0 / 3.0);
  const QoISpec spacetime = qoi_spec(QoIKind::spacetime, opt, 1.0, 1.0, 2.0 / 3.0);

  std::vector<SweepTable> out;
  SweepPlan p = base;
  p.scenario = std::make_shared<const ScenarioPreset>(preset_2d(PhaseKind2D::abs));
  p.modes = {Mode::minus};
  p.qoi = space;
  out.push_back(run_sweep(p));

  p = base;
  p.scenario = std::make_shared<const ScenarioPreset>(preset_2d(PhaseKind2D::linear));
  p.modes = {Mode::plus, Mode::minus};
  for (SweepTable& t : run_sweeps(p, {space, spacetime})) out.push_back(std::move(t));
  return out;
}

ArtifactBundle reproduce_figure(const std::string& id, const FigureOptions& opt) {
  if (id == "fig1") return figure1(opt);
  if (id == "fig2")
    return grid_bundle("fig2", figure2_tables(opt),
                       {"Q~ phi0=x", "Q~ phi0=x^2", "Q phi0=x (time-integrated)"}, "y");
  if (id == "fig3") return snapshots("fig3", PhaseKind2D::abs, {Mode::minus}, opt);
  if (id == "fig4")
    return grid_bundle("fig4", figure4_tables(opt),
                       {"Q~ one-mode phi0=|x1|+(x2-y1)^2", "Q~ two-mode phi0=x1+(x2-y1)^2",
                        "Q two-mode phi0=x1+(x2-y1)^2 (time-integrated)"},
                       "r");
  if (id == "fig5") return snapshots("fig5", PhaseKind2D::linear, {Mode::plus, Mode::minus}, opt);
  throw UnknownFigure("unknown figure '" + id + "', expected one of fig1..fig5");
}

}  // namespace gbq
