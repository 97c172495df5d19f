#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gbq/cli.hpp"
#include "gbq/config.hpp"
#include "gbq/csv.hpp"
#include "gbq/errors.hpp"

using namespace gbq;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gbq_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Run run(const fs::path& dir, const std::string& config, std::vector<std::string> extra = {}) {
  const fs::path cfg = dir / "run.cfg";
  std::ofstream(cfg) << config;
  std::vector<std::string> args{"gbq", "--config", cfg.string(), "--out", (dir / "out").string()};
  args.insert(args.end(), extra.begin(), extra.end());
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> listing(const fs::path& dir) {
  std::vector<std::string> names;
  if (!fs::exists(dir)) return names;
  for (const auto& e : fs::directory_iterator(dir)) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace

TEST_CASE("config syntax") {
  const Config c = Config::parse_string(
      "# comment\n"
      "command = qoi   # trailing comment\n"
      "epsilon = [1/40, 0.0125, 1/160]\n"
      "scenario.name = \"1d-linear\"\n"
      "qoi.error_estimate = true\n"
      "sweep.counts = [3, 4]\n"
      "modes = [+, -]\n");
  CHECK(c.get_string("command") == "qoi");
  const auto e = c.get_double_list("epsilon");
  REQUIRE(e.size() == 3);
  CHECK(e[0] == 1.0 / 40);
  CHECK(e[2] == 1.0 / 160);
  CHECK(c.get_string("scenario.name") == "1d-linear");
  CHECK(c.get_bool("qoi.error_estimate"));
  CHECK(c.get_int_list("sweep.counts") == std::vector<int>{3, 4});
  CHECK(c.get_string_list("modes") == std::vector<std::string>{"+", "-"});
  CHECK(c.get_double("missing", 2.5) == 2.5);
  CHECK_THROWS_AS(c.get_double("command"), ConfigParseError);
  CHECK_THROWS_AS(c.get_int("epsilon"), ConfigParseError);
  CHECK_THROWS_AS(c.get_string("nope"), ConfigParseError);

  try {
    Config::parse_string("a = 1\nb = 2\na = 3\n");
    FAIL("duplicate accepted");
  } catch (const ConfigParseError& err) {
    CHECK(err.line() == 3);
    CHECK(err.field() == "a");
  }
  CHECK_THROWS_AS(Config::parse_string("just words\n"), ConfigParseError);
  CHECK_THROWS_AS(Config::parse_string("x = [1, 2\n"), ConfigParseError);

  Config u = Config::parse_string("a = 1\nb = 2\n");
  u.get_double("a");
  try {
    u.reject_unused();
    FAIL("unused key accepted");
  } catch (const ConfigParseError& err) {
    CHECK(err.field() == "b");
    CHECK(err.line() == 2);
  }

  Config o = Config::parse_string("b = 2\na = 1\n");
  o.set_override("a=5");
  CHECK(o.get_double("a") == 5.0);
  CHECK(o.canonical() == "a = 5\nb = 2\n");
}

TEST_CASE("numbers and hashing") {
  CHECK(parse_number("1/40") == 1.0 / 40);
  CHECK(parse_number("-2.5e-3") == -2.5e-3);
  CHECK_FALSE(parse_number("1/0").has_value());
  CHECK_FALSE(parse_number("abc").has_value());
  CHECK_FALSE(parse_number("3x").has_value());
  // Reference values of 64-bit FNV-1a.
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("csv formatting round-trips doubles") {
  for (double v : {0.1, 1.0 / 3, 1e-300, -2.5, 6.02214076e23, 0.0})
    CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(-kInf) == "-inf");
  std::ostringstream os;
  CsvWriter w(os);
  w.header({"a", "b"});
  w.row(std::vector<double>{0.1, 2.0});
  std::istringstream is(os.str());
  const CsvTable t = read_csv(is);
  CHECK(t.column("b") == 1);
  CHECK(t.column("c") == -1);
  CHECK(t.rows.at(0).at(0) == "0.1");
}

TEST_CASE("malformed configs exit 2 and leave nothing behind") {
  const fs::path dir = scratch("malformed");
  const Run r = run(dir, "command = validate\nscenario.name = 1d-linear\nvalidate.samples = ten\n");
  CHECK(r.code == 2);
  const auto j = nlohmann::json::parse(r.err);
  CHECK(j["error"] == "ConfigParseError");
  CHECK(j["field"] == "validate.samples");
  CHECK(listing(dir / "out").empty());

  const Run u = run(dir, "command = validate\nscenario.name = 1d-linear\ntypo.key = 3\n");
  CHECK(u.code == 2);
  CHECK(nlohmann::json::parse(u.err)["field"] == "typo.key");
  CHECK(listing(dir / "out").empty());

  const Run bad = run(dir, "command = validate\nscenario.name = 4d-cube\n");
  CHECK(bad.code == 2);
  CHECK(nlohmann::json::parse(bad.err)["field"] == "scenario.name");

  const Run cmd = run(dir, "command = launch\n");
  CHECK(cmd.code == 2);

  std::vector<std::string> args{"gbq"};
  std::vector<char*> argv{args[0].data()};
  std::ostringstream out, err;
  CHECK(run_cli(1, argv.data(), out, err) == 2);
  CHECK(nlohmann::json::parse(err.str())["error"] == "UsageError");
}

TEST_CASE("runtime failures exit 1 with the error kind") {
  const fs::path dir = scratch("unknown_fig");
  const Run r = run(dir, "command = reproduce-figure\nfigure = fig9\n");
  CHECK(r.code == 1);
  CHECK(nlohmann::json::parse(r.err)["error"] == "UnknownFigure");
  CHECK(listing(dir / "out").empty());
}

TEST_CASE("validate: deterministic artifacts and manifest") {
  const fs::path dir = scratch("validate");
  const std::string cfg = "command = validate\nscenario.name = 2d-abs\nvalidate.samples = 50\n";
  const Run a = run(dir, cfg);
  REQUIRE(a.code == 0);
  const std::string first = slurp(dir / "out" / "validation.csv");
  const std::string man = slurp(dir / "out" / "manifest.json");
  const Run b = run(dir, cfg);
  REQUIRE(b.code == 0);
  CHECK(slurp(dir / "out" / "validation.csv") == first);
  CHECK(slurp(dir / "out" / "manifest.json") == man);
  const auto j = nlohmann::json::parse(man);
  REQUIRE(j["files"].size() == 1);
  CHECK(j["files"][0]["file"] == "validation.csv");
  CHECK(j["files"][0]["role"] == "report");
  CHECK(j["files"][0]["config_hash"] == fnv1a_hex(Config::parse_string(cfg).canonical()));
  CHECK(listing(dir / "out") == std::vector<std::string>{"manifest.json", "validation.csv"});
}

TEST_CASE("qoi command with overrides") {
  const fs::path dir = scratch("qoi");
  const Run r = run(dir,
                    "command = qoi\nscenario.name = 1d-linear\nscenario.s = 1.5\nepsilon = [1/40]\n"
                    "y = [1.6, 1.9]\nt = 0.5\nqoi.exact = true\n",
                    {"--override", "qoi.resolution=10"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  std::istringstream is(slurp(dir / "out" / "qoi.csv"));
  const CsvTable t = read_csv(is);
  CHECK(t.rows.size() == 4);
  const int kind = t.column("kind"), val = t.column("value");
  REQUIRE(kind >= 0);
  double gb = 0, ex = 0;
  for (const auto& row : t.rows) (row[kind] == "exact" ? ex : gb) += std::stod(row[val]);
  CHECK(gb > 0.0);
  CHECK(ex > 0.0);
  const auto j = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
  CHECK(j["files"][0]["config_hash"] != fnv1a_hex(Config::parse_string("").canonical()));
}

TEST_CASE("sweep and fit commands") {
  const fs::path dir = scratch("sweep");
  const Run r = run(dir,
                    "command = sweep\nscenario.name = 1d-quadratic\nsweep.eps = [1/40, 1/60, 1/80]\n"
                    "sweep.counts = [5]\nsweep.sigmas = [0, 1]\nqoi.resolution = 2\n");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const fs::path table = dir / "out" / "sweep.csv";
  std::istringstream is(slurp(table));
  CHECK(read_csv(is).rows.size() == 15);

  const fs::path dir2 = scratch("fit");
  const Run f = run(dir2, "command = fit\nfit.table = \"" + table.string() + "\"\nfit.sigmas = [1]\n");
  REQUIRE_MESSAGE(f.code == 0, f.err);
  const auto j = nlohmann::json::parse(slurp(dir2 / "out" / "fit.json"));
  REQUIRE(j.size() == 1);
  CHECK(j[0]["sigma"] == 1);
  CHECK(j[0]["epsilons"].size() == 3);
}

TEST_CASE("snapshot command: one CSV per parameter value") {
  const fs::path dir = scratch("snapshot");
  const Run r = run(dir,
                    "command = snapshot\nscenario.name = 2d-abs\nepsilon = [1/30]\nt = 1\nmodes = [-]\n"
                    "y = [0, 0.8, 0.25, 1.0, 0.5, 1.2]\nsnapshot.counts = [21, 21]\n");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(listing(dir / "out") ==
        std::vector<std::string>{"manifest.json", "snapshot_0.csv", "snapshot_1.csv", "snapshot_2.csv"});
  std::istringstream is(slurp(dir / "out" / "snapshot_1.csv"));
  const CsvTable t = read_csv(is);
  CHECK(t.rows.size() == 21 * 21);
  CHECK(t.column("abs_u") >= 0);
}

TEST_CASE("reproduce-figure fig1") {
  const fs::path dir = scratch("fig1");
  const Run r = run(dir, "command = reproduce-figure\nfigure = fig1\n");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto j = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
  CHECK(j["figure"] == "fig1");
  CHECK(j["panels"].size() == 3);
  CHECK(j["files"].size() == 3);
  for (const auto& f : j["files"]) {
    CHECK(fs::exists(dir / "out" / f["file"].get<std::string>()));
    CHECK(f["role"] == "panel");
  }
  const std::string a = slurp(dir / "out" / "fig1_t1.csv");
  REQUIRE(run(dir, "command = reproduce-figure\nfigure = fig1\n").code == 0);
  CHECK(slurp(dir / "out" / "fig1_t1.csv") == a);
}

TEST_CASE("reproduce-figure fig3 at reduced resolution") {
  const fs::path dir = scratch("fig3");
  const Run r = run(dir, "command = reproduce-figure\nfigure = fig3\nfigure.snapshot_points = 41\n");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto j = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
  CHECK(j["panels"].size() == 3);
  int snaps = 0;
  for (const auto& f : j["files"]) snaps += f["role"] == "snapshot";
  CHECK(snaps == 3);
}
