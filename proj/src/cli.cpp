#include "gbq/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <omp.h>

#include <CLI11.hpp>

#include "gbq/csv.hpp"
#include "gbq/errors.hpp"
#include "gbq/exact.hpp"

namespace gbq {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::shared_ptr<const ScenarioPreset> scenario_from(const Config& c) {
  const std::string name = c.get_string("scenario.name");
  const double s = c.get_double("scenario.s", 3.0);
  if (!(s > 0.0)) throw ConfigParseError(0, "scenario.s", "scenario.s must be positive");
  try {
    return std::make_shared<const ScenarioPreset>(preset_by_name(name, s));
  } catch (const std::invalid_argument& e) {
    throw ConfigParseError(0, "scenario.name", e.what());
  }
}

std::vector<double> epsilons_from(const Config& c, const std::string& key, std::vector<double> fallback) {
  std::vector<double> e = c.get_double_list(key, fallback);
  if (e.empty()) throw ConfigParseError(0, key, "empty epsilon list");
  for (double v : e)
    if (!(v > 0.0 && v <= 1.0)) throw ConfigParseError(0, key, "epsilon values must lie in (0, 1]");
  return e;
}

std::vector<Mode> modes_from(const Config& c) {
  std::vector<Mode> out;
  for (const std::string& m : c.get_string_list("modes", std::vector<std::string>{"+", "-"})) {
    if (m == "+" || m == "plus") out.push_back(Mode::plus);
    else if (m == "-" || m == "minus") out.push_back(Mode::minus);
    else throw ConfigParseError(0, "modes", "unknown mode '" + m + "'");
  }
  if (out.empty()) throw ConfigParseError(0, "modes", "no modes selected");
  return out;
}

CutoffSpec cutoff_from(const Config& c) {
  CutoffSpec cut;
  const std::string v = c.get_string("cutoff.eta", std::string("none"));
  if (v != "none") {
    const auto x = parse_number(v);
    if (!x || !(*x > 0.0)) throw ConfigParseError(0, "cutoff.eta", "cutoff.eta must be positive or 'none'");
    cut.eta = *x;
  }
  return cut;
}

double positive(const Config& c, const std::string& key, double fallback) {
  const double v = c.get_double(key, fallback);
  if (!(v > 0.0)) throw ConfigParseError(0, key, key + " must be positive");
  return v;
}

// Parameter points from `y` (N values per point) or `r` (diagonal presets).
std::vector<Vec> points_from(const Config& c, const ScenarioPreset& s) {
  std::vector<Vec> pts;
  if (c.has("r")) {
    if (!s.diagonal) throw ConfigParseError(0, "r", "scenario has no diagonal path");
    for (double r : c.get_double_list("r")) pts.push_back(s.diagonal->at(r));
    return pts;
  }
  const Vec mid = 0.5 * (s.parameter_box.lo + s.parameter_box.hi);
  const std::vector<double> flat = c.get_double_list("y", std::vector<double>(mid.data(), mid.data() + mid.size()));
  if (flat.empty() || flat.size() % s.N) throw ConfigParseError(0, "y", "y needs a multiple of N values");
  for (std::size_t i = 0; i < flat.size(); i += s.N) {
    Vec y(s.N);
    for (int a = 0; a < s.N; ++a) y(a) = flat[i + a];
    pts.push_back(y);
  }
  return pts;
}

QoISpec qoi_from(const Config& c) {
  QoISpec q;
  try {
    q.kind = qoi_kind_from_string(c.get_string("qoi.kind", std::string("space")));
  } catch (const std::invalid_argument& e) {
    throw ConfigParseError(0, "qoi.kind", e.what());
  }
  q.ord.p = c.get_int("qoi.p", 0);
  const std::vector<int> alpha = c.get_int_list("qoi.alpha", std::vector<int>{});
  if (alpha.size() > static_cast<std::size_t>(kMaxDim)) throw ConfigParseError(0, "qoi.alpha", "too many entries");
  for (std::size_t i = 0; i < alpha.size(); ++i) q.ord.alpha[i] = alpha[i];
  if (q.ord.p < 0 || std::any_of(alpha.begin(), alpha.end(), [](int a) { return a < 0; }))
    throw ConfigParseError(0, "qoi.p", "derivative orders must be non-negative");
  q.resolution = positive(c, "qoi.resolution", 8.0);
  q.h_x_eps = c.get_double("qoi.h_x_eps", 0.0);
  q.h_t_eps = c.get_double("qoi.h_t_eps", 0.0);
  const std::string rule = c.get_string("qoi.rule", std::string("trapezoid"));
  if (rule == "trapezoid") q.rule = QuadratureRule::trapezoid;
  else if (rule == "simpson") q.rule = QuadratureRule::simpson;
  else throw ConfigParseError(0, "qoi.rule", "qoi.rule must be trapezoid or simpson");
  q.estimate_error = c.get_bool("qoi.error_estimate", false);
  return q;
}

std::string describe_command() { return "validate, snapshot, qoi, sweep, fit, reproduce-figure"; }

ArtifactBundle cmd_validate(const Config& c, std::ostream& log) {
  const auto s = scenario_from(c);
  const int samples = c.get_int("validate.samples", 200);
  if (samples < 1) throw ConfigParseError(0, "validate.samples", "validate.samples must be >= 1");
  const double spacing = positive(c, "validate.launch_spacing", 0.05);
  c.reject_unused();
  const ValidationReport rep = validate_scenario(*s, samples, spacing);
  std::ostringstream os;
  CsvWriter w(os);
  w.header({"assumption", "pass", "worst", "witness_x", "witness_y"});
  auto join = [](const Vec& v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? " " : "") + format_double(v(i));
    return out;
  };
  for (const ValidationCheck& ch : rep.checks)
    w.row(std::vector<CsvCell>{ch.assumption, std::string(ch.pass ? "true" : "false"), ch.worst, join(ch.witness_x),
                               join(ch.witness_y)});
  rep.throw_if_failed();
  log << "scenario " << s->name << ": all " << rep.checks.size() << " checks pass\n";
  ArtifactBundle b;
  b.add("validation.csv", "report", os.str());
  b.manifest["scenario"] = s->name;
  return b;
}

ArtifactBundle cmd_snapshot(const Config& c, std::ostream& log) {
  const auto s = scenario_from(c);
  const double eps = epsilons_from(c, "epsilon", {1.0 / 40}).front();
  const double t = c.get_double("t", s->default_time);
  if (t < 0.0) throw ConfigParseError(0, "t", "t must be non-negative");
  const std::vector<Vec> pts = points_from(c, *s);
  const std::vector<Mode> modes = modes_from(c);
  const CutoffSpec cut = cutoff_from(c);
  const double zf = positive(c, "grid.z_factor", 0.5);
  std::vector<int> counts = c.get_int_list("snapshot.counts", std::vector<int>(s->n, s->n == 1 ? 2001 : 241));
  if (static_cast<int>(counts.size()) != s->n) throw ConfigParseError(0, "snapshot.counts", "need one count per axis");
  for (int k : counts)
    if (k < 2) throw ConfigParseError(0, "snapshot.counts", "counts must be >= 2");
  Box box = s->window.support.inflated(1.0);
  if (c.has("snapshot.box")) {
    const std::vector<double> bx = c.get_double_list("snapshot.box");
    if (static_cast<int>(bx.size()) != 2 * s->n)
      throw ConfigParseError(0, "snapshot.box", "snapshot.box takes n lower then n upper bounds");
    for (int a = 0; a < s->n; ++a) {
      box.lo(a) = bx[a];
      box.hi(a) = bx[s->n + a];
    }
  }
  c.reject_unused();
  ArtifactBundle b;
  json panels = json::array();
  for (std::size_t k = 0; k < pts.size(); ++k) {
    auto fan = std::make_shared<const BeamFan>(build_fan(*s, pts[k], std::max(t, 1e-9), zf * std::sqrt(eps), modes));
    const FieldSpec fsp = make_field_spec(s, fan, eps, modes, cut);
    std::ostringstream os;
    write_field_snapshot(os, fsp, t, box, counts);
    const std::string file = "snapshot_" + std::to_string(k) + ".csv";
    b.add(file, "snapshot", os.str());
    json p;
    p["file"] = file;
    json yj = json::array();
    for (Eigen::Index a = 0; a < pts[k].size(); ++a) yj.push_back(pts[k](a));
    p["y"] = yj;
    panels.push_back(p);
    log << "snapshot " << k << ": " << fan->beam_count() << " beams\n";
  }
  b.manifest["scenario"] = s->name;
  b.manifest["epsilon"] = eps;
  b.manifest["t"] = t;
  b.manifest["panels"] = panels;
  return b;
}

ArtifactBundle cmd_qoi(const Config& c, std::ostream& log) {
  const auto s = scenario_from(c);
  const std::vector<double> eps = epsilons_from(c, "epsilon", {1.0 / 40});
  const QoISpec q = qoi_from(c);
  const double t = c.get_double("t", s->default_time);
  const std::vector<Vec> pts = points_from(c, *s);
  const std::vector<Mode> modes = modes_from(c);
  const CutoffSpec cut = cutoff_from(c);
  const double zf = positive(c, "grid.z_factor", 0.5);
  const bool exact = c.get_bool("qoi.exact", false);
  c.reject_unused();

  std::ostringstream os;
  CsvWriter w(os);
  std::vector<std::string> head{"scenario", "kind", "p", "alpha", "epsilon"};
  for (int a = 0; a < s->N; ++a) head.push_back("y" + std::to_string(a + 1));
  for (const char* h : {"t", "value", "err_est"}) head.push_back(h);
  w.header(head);
  const bool timed = q.kind != QoIKind::space;
  auto emit = [&](const std::string& kind, double e, const Vec& y, double value, double err) {
    std::vector<CsvCell> row{s->name, kind, static_cast<long long>(q.ord.p),
                             static_cast<long long>(q.ord.spatial_order()), e};
    for (int a = 0; a < s->N; ++a) row.emplace_back(y(a));
    if (timed) row.emplace_back(std::string("-"));
    else row.emplace_back(t);
    row.emplace_back(value);
    row.emplace_back(err);
    w.row(row);
  };
  const WindowFunction& win = timed ? s->window_spacetime : s->window;
  for (double e : eps) {
    for (const Vec& y : pts) {
      const double T = timed ? win.t_hi : t;
      auto fan = std::make_shared<const BeamFan>(build_fan(*s, y, std::max(T, 1e-9), zf * std::sqrt(e), modes));
      const FieldSpec fsp = make_field_spec(s, fan, e, modes, cut);
      const QoIValue v = evaluate_qoi(fsp, q, y, t);
      emit(to_string(q.kind), e, y, v.value, v.err_est);
      log << to_string(q.kind) << " eps=" << epsilon_label(e) << " value=" << format_double(v.value) << "\n";
      if (exact) {
        if (!q.ord.is_zero()) throw UnsupportedOrder("the closed-form reference covers order (0, 0) only");
        if (q.kind != QoIKind::space && q.kind != QoIKind::spacetime)
          throw UnsupportedScenario("the closed-form reference covers space and spacetime kinds");
        const DAlembertField f = make_dalembert(s, y, e);
        const ExactQoIDecomposition d = timed ? exact_qoi_spacetime(f, win) : exact_qoi_space(f, win, t);
        double val = 0.0;
        const bool hp = std::count(modes.begin(), modes.end(), Mode::plus) > 0;
        const bool hm = std::count(modes.begin(), modes.end(), Mode::minus) > 0;
        if (hp) val += d.plus;
        if (hm) val += d.minus;
        if (hp && hm) val += d.cross;
        emit("exact", e, y, val, 0.0);
      }
    }
  }
  ArtifactBundle b;
  b.add("qoi.csv", "result", os.str());
  b.manifest["scenario"] = s->name;
  return b;
}

SweepPlan plan_from(const Config& c) {
  SweepPlan p;
  p.scenario = scenario_from(c);
  if (c.has("sweep.eps") && c.has("epsilon"))
    throw ConfigParseError(0, "sweep.eps", "give either epsilon or sweep.eps, not both");
  p.epsilons = epsilons_from(c, c.has("sweep.eps") ? "sweep.eps" : "epsilon", {1.0 / 40, 1.0 / 80, 1.0 / 160});
  p.qoi = qoi_from(c);
  p.diagonal = c.get_bool("sweep.diagonal", false);
  p.counts = c.get_int_list("sweep.counts", std::vector<int>(p.diagonal ? 1 : p.scenario->N, 101));
  p.axis = c.get_int("sweep.axis", 0);
  p.t = c.get_double("t", -1.0);
  p.modes = modes_from(c);
  p.cutoff = cutoff_from(c);
  p.sigmas = c.get_int_list("sweep.sigmas", std::vector<int>{0, 1, 2});
  const std::string src = c.get_string("sweep.source", std::string("cell"));
  if (src == "cell") p.source = StencilSource::cell;
  else if (src == "table") p.source = StencilSource::table;
  else throw ConfigParseError(0, "sweep.source", "sweep.source must be cell or table");
  p.h_y = c.get_double("sweep.h_y", 1e-3);
  p.h_y_eps = c.get_double("sweep.h_y_eps", 0.0);
  p.z_factor = positive(c, "grid.z_factor", 0.5);
  p.T = c.get_double("sweep.T", -1.0);
  p.workers = c.get_int("sweep.workers", 0);
  if (c.has("sweep.box")) {
    const std::vector<double> bx = c.get_double_list("sweep.box");
    const int N = p.scenario->N;
    if (static_cast<int>(bx.size()) != 2 * N) throw ConfigParseError(0, "sweep.box", "sweep.box takes N lower then N upper bounds");
    Box b{Vec(N), Vec(N)};
    for (int a = 0; a < N; ++a) {
      b.lo(a) = bx[a];
      b.hi(a) = bx[N + a];
    }
    p.box = b;
  }
  p.validate();
  return p;
}

std::string csv_of(const SweepTable& t) {
  std::ostringstream os;
  t.write_csv(os);
  return os.str();
}

ArtifactBundle cmd_sweep(const Config& c, std::ostream& log) {
  const SweepPlan p = plan_from(c);
  c.reject_unused();
  const SweepTable t = run_sweep(p);
  log << "sweep: " << t.rows.size() << " rows, " << t.failures.size() << " failed cells, "
      << format_double(t.seconds) << " s\n";
  ArtifactBundle b;
  b.add("sweep.csv", "table", csv_of(t));
  b.manifest["scenario"] = t.scenario;
  b.manifest["rows"] = t.rows.size();
  b.manifest["failures"] = t.failures;
  return b;
}

ArtifactBundle cmd_fit(const Config& c, std::ostream& log) {
  ArtifactBundle b;
  SweepTable t;
  if (c.has("fit.table")) {
    const std::string path = c.get_string("fit.table");
    const std::vector<int> sig = c.get_int_list("fit.sigmas", std::vector<int>{});
    c.reject_unused();
    std::ifstream f(path);
    if (!f) throw ConfigParseError(0, "fit.table", "cannot read sweep table '" + path + "'");
    t = read_sweep_table(f);
    if (!sig.empty()) {
      for (int s : sig)
        if (std::find(t.sigmas.begin(), t.sigmas.end(), s) == t.sigmas.end())
          throw ConfigParseError(0, "fit.sigmas", "table has no column d" + std::to_string(s));
      std::vector<ScalingFit> fits;
      for (int s : sig) fits.push_back(fit_scaling(t, s));
      b.add("fit.json", "fit", scaling_json(fits) + "\n");
      return b;
    }
  } else {
    const SweepPlan p = plan_from(c);
    c.reject_unused();
    t = run_sweep(p);
    b.add("sweep.csv", "table", csv_of(t));
  }
  if (t.epsilons.size() < 3) throw InvalidPlan("a scaling fit needs at least 3 epsilon values");
  std::vector<ScalingFit> fits;
  for (int s : t.sigmas) fits.push_back(fit_scaling(t, s));
  for (const ScalingFit& f : fits)
    log << "sigma=" << f.sigma << " rho=" << format_double(f.rho) << " " << to_string(f.cls) << "\n";
  b.add("fit.json", "fit", scaling_json(fits) + "\n");
  return b;
}

ArtifactBundle cmd_figure(const Config& c, std::ostream& log) {
  const std::string id = c.get_string("figure");
  FigureOptions o;
  o.epsilons = c.get_double_list("figure.eps", std::vector<double>{});
  for (double e : o.epsilons)
    if (!(e > 0.0 && e <= 1.0)) throw ConfigParseError(0, "figure.eps", "epsilon values must lie in (0, 1]");
  o.points = c.get_int("figure.points", 101);
  if (o.points < 5) throw ConfigParseError(0, "figure.points", "figure.points must be >= 5");
  o.z_factor = positive(c, "grid.z_factor", 0.5);
  if (c.has("figure.resolution")) o.resolution = positive(c, "figure.resolution", 8.0);
  if (c.has("figure.h_x_eps")) o.h_x_eps = positive(c, "figure.h_x_eps", 1.0);
  if (c.has("figure.h_t_eps")) o.h_t_eps = positive(c, "figure.h_t_eps", 1.0);
  if (c.has("figure.source")) {
    const std::string s = c.get_string("figure.source");
    if (s == "cell") o.source = StencilSource::cell;
    else if (s == "table") o.source = StencilSource::table;
    else throw ConfigParseError(0, "figure.source", "figure.source must be cell or table");
  }
  o.snapshot_points = c.get_int("figure.snapshot_points", 481);
  if (o.snapshot_points < 2) throw ConfigParseError(0, "figure.snapshot_points", "must be >= 2");
  o.workers = c.get_int("sweep.workers", 0);
  c.reject_unused();
  ArtifactBundle b = reproduce_figure(id, o);
  log << id << ": " << b.files.size() << " files\n";
  return b;
}

}  // namespace

ArtifactBundle run_command(const Config& c, std::ostream& log) {
  const std::string cmd = c.get_string("command");
  c.get_string("out", std::string());  // consumed by run_cli
  c.get_int("workers", 0);
  ArtifactBundle b;
  if (cmd == "validate") b = cmd_validate(c, log);
  else if (cmd == "snapshot") b = cmd_snapshot(c, log);
  else if (cmd == "qoi") b = cmd_qoi(c, log);
  else if (cmd == "sweep") b = cmd_sweep(c, log);
  else if (cmd == "fit") b = cmd_fit(c, log);
  else if (cmd == "reproduce-figure") b = cmd_figure(c, log);
  else throw ConfigParseError(0, "command", "unknown command '" + cmd + "', expected one of " + describe_command());
  b.manifest["command"] = cmd;
  return b;
}

void commit_bundle(const ArtifactBundle& b, const std::string& out_dir, const std::string& config_hash) {
  const fs::path out(out_dir);
  fs::create_directories(out);
  // Stage everything first so a write failure leaves the directory untouched.
  const fs::path stage = out / (".staging-" + config_hash);
  fs::remove_all(stage);
  fs::create_directories(stage);
  json manifest = b.manifest;
  manifest["config_hash"] = config_hash;
  json files = json::array();
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream f(stage / name, std::ios::binary);
    f << content;
    if (!f) throw std::runtime_error("cannot write " + (stage / name).string());
  };
  for (const Artifact& a : b.files) {
    write(a.file, a.content);
    files.push_back({{"file", a.file}, {"role", a.role}, {"config_hash", config_hash}});
  }
  manifest["files"] = files;
  write("manifest.json", manifest.dump(2) + "\n");
  for (const Artifact& a : b.files) fs::rename(stage / a.file, out / a.file);
  fs::rename(stage / "manifest.json", out / "manifest.json");
  fs::remove_all(stage);
}

std::string error_json(const std::exception& e) {
  json j;
  if (const auto* ce = dynamic_cast<const ConfigParseError*>(&e)) {
    j["error"] = ce->kind();
    j["message"] = ce->what();
    j["line"] = ce->line();
    j["field"] = ce->field();
  } else if (const auto* ge = dynamic_cast<const Error*>(&e)) {
    j["error"] = ge->kind();
    j["message"] = ge->what();
  } else {
    j["error"] = "InternalError";
    j["message"] = e.what();
  }
  return j.dump();
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gaussian beam QoI laboratory"};
  std::string config_path, out_dir;
  int workers = 0;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "config file")->required();
  app.add_option("--out", out_dir, "output directory (default: config key 'out' or ./out)");
  app.add_option("--workers", workers, "OpenMP threads (0: runtime default)")->check(CLI::NonNegativeNumber);
  app.add_option("--override", overrides, "key=value, repeatable");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    json j;
    j["error"] = "UsageError";
    j["message"] = e.what();
    err << j.dump() << "\n";
    return 2;
  }
  try {
    Config cfg = Config::load(config_path);
    for (const std::string& o : overrides) cfg.set_override(o);
    if (workers == 0) workers = cfg.get_int("workers", 0);
    if (workers < 0) throw ConfigParseError(0, "workers", "workers must be >= 0");
    if (workers > 0) omp_set_num_threads(workers);
    if (out_dir.empty()) out_dir = cfg.get_string("out", std::string("out"));
    const ArtifactBundle b = run_command(cfg, out);
    const std::string hash = fnv1a_hex(cfg.canonical());
    commit_bundle(b, out_dir, hash);
    out << "wrote " << b.files.size() + 1 << " files to " << out_dir << " (config " << hash << ")\n";
    return 0;
  } catch (const ConfigParseError& e) {
    err << error_json(e) << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << error_json(e) << "\n";
    return 1;
  }
}

}  // namespace gbq
