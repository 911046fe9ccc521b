#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "harnack_lab/config.hpp"
#include "harnack_lab/report.hpp"
#include "harnack_lab/runner.hpp"

using namespace hlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("harnack_lab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string write(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// rows and estimates only: provenance carries a timestamp
std::string numeric_sections(const ReportDocument& r) {
  ReportDocument copy = r;
  copy.provenance = nlohmann::json::object();
  std::ostringstream out;
  write_json_lines(out, copy);
  return out.str();
}

const char* kCounterexample = R"({
  "experiment": "counterexample",
  "resolution": {"h": "1/64", "tau": "1/64"},
  "options": {"alpha": "5/12", "beta": "2/3", "depths": [2, 3]}
})";

const char* kHarnack = R"({
  "experiment": "harnack",
  "geometry": {"dim": 1, "anchor": [0, 0], "radius": 0.5},
  "resolution": {"h": ["1/16"], "tau_rule": "quadratic"},
  "ensemble": {"seed": 7, "count": 6}
})";

}  // namespace

TEST(Config, ParseErrorReportsLineAndColumn) {
  try {
    parse_config_text("{\n  \"a\": 1,\n  \"b\": ]\n}", "demo.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("demo.json:3:8:", 0), 0u) << e.what();
  }
}

TEST(Config, RationalNumbers) {
  EXPECT_DOUBLE_EQ(parse_number("5/12", "x"), 5.0 / 12.0);
  EXPECT_DOUBLE_EQ(parse_number("-1/2", "x"), -0.5);
  EXPECT_DOUBLE_EQ(parse_number(0.25, "x"), 0.25);
  EXPECT_THROW(parse_number("1/0", "x"), ConfigError);
  EXPECT_THROW(parse_number("abc", "x"), ConfigError);
}

TEST(Config, UnknownFieldsAndMissingSeed) {
  auto cfg = nlohmann::json::parse(kHarnack);
  cfg["ensemble"]["cnt"] = 3;
  EXPECT_THROW(run_experiment("harnack", cfg), ConfigError);
  cfg = nlohmann::json::parse(kHarnack);
  cfg["ensemble"].erase("seed");
  try {
    run_experiment("harnack", cfg);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("seed"), std::string::npos);
  }
  EXPECT_THROW(run_experiment("nonsense", cfg), ConfigError);
}

TEST(Report, EmptyReportIsHeaderOnlyCsv) {
  ReportDocument r;
  std::ostringstream out;
  write_csv(out, r);
  EXPECT_EQ(out.str(), "experiment,instance_id,seed,n,nu,S,resolution_h,resolution_tau,name,value,flag\n");
}

TEST(Report, JsonLinesRoundTrip) {
  ReportDocument r;
  r.experiment = "demo";
  r.config = {{"seed", 3}};
  r.rows.push_back({"demo", 2, 3, 1, 1.5, 0.25, 1.0 / 32, 1.0 / 1024, "ratio", 0.1 + 0.2, "a,b"});
  r.rows.push_back({"demo", -1, 3, 2, 1.0, 0.0, 0.5, 0.25, "inf", std::numeric_limits<double>::infinity(), ""});
  r.estimates.push_back(ConstantEstimate::from("N", {1.0, 2.0, 4.0}));
  r.curves.push_back({"osc", {0.0, 0.5}, {1.0, std::nan("")}});
  r.checks.push_back({"c", false, "detail"});
  r.provenance = {{"version", "x"}};
  std::stringstream s;
  write_json_lines(s, r);
  const auto back = read_json_lines(s);
  ASSERT_EQ(back.rows.size(), 2u);
  EXPECT_EQ(back.rows[0].value, r.rows[0].value);
  EXPECT_EQ(back.rows[0].flag, "a,b");
  EXPECT_EQ(back.rows[0].resolution_tau, r.rows[0].resolution_tau);
  EXPECT_TRUE(std::isinf(back.rows[1].value));
  EXPECT_EQ(back.estimates[0].median, 2.0);
  EXPECT_TRUE(std::isnan(back.curves[0].y[1]));
  EXPECT_FALSE(back.checks[0].pass);
  EXPECT_EQ(back.config, r.config);
  EXPECT_EQ(back.provenance, r.provenance);
  std::stringstream again;
  write_json_lines(again, back);
  EXPECT_EQ(again.str(), s.str());
}

TEST(Report, GridFunctionRoundTrip) {
  auto g = std::make_shared<const SpaceTimeGrid>(
      SpaceTimeGrid::cylinder(ParabolicCylinder::make(Point::at(0.0, 0.0, 0.0), 1.0), 0.25, 1.0 / 16));
  const auto u = GridFunction::sample(g, [](const Point& p) { return p.x[0] * 0.1 + p.x[1] - p.t / 3; });
  std::stringstream s;
  write_grid_function(s, u);
  const auto v = read_grid_function(s);
  EXPECT_EQ(v.values, u.values);
  EXPECT_EQ(v.grid->classes(), g->classes());
}

TEST(Runner, CounterexampleReport) {
  const auto r = run_experiment("counterexample", nlohmann::json::parse(kCounterexample));
  EXPECT_FALSE(r.failed());
  auto value = [&](const std::string& name) {
    for (const auto& row : r.rows) {
      if (row.name == name) return row.value;
    }
    return std::nan("");
  };
  EXPECT_NEAR(value("integrability_exponent"), -11.0 / 12.0, 1e-15);
  EXPECT_NEAR(value("profile_exponent"), -5.0 / 6.0, 1e-15);
  EXPECT_NEAR(value("supercritical_exponent"), -1.0 / 12.0, 1e-15);
  EXPECT_NEAR(value("l2_squared_quadrature"), 24.0, 1e-3);
  const Curve* osc = nullptr;
  const Curve* bound = nullptr;
  for (const auto& c : r.curves) {
    if (c.name == "osc") osc = &c;
    if (c.name == "bound") bound = &c;
  }
  ASSERT_TRUE(osc && bound);
  EXPECT_EQ(osc->x, bound->x);
}

TEST(Runner, BadAlphaIsAnError) {
  const fs::path dir = scratch("alpha");
  auto cfg = nlohmann::json::parse(kCounterexample);
  cfg["options"]["alpha"] = "1/2";
  RunOptions opt;
  opt.config_path = write(dir, "c.json", cfg.dump());
  opt.out_dir = dir.string();
  const auto out = run(opt);
  EXPECT_EQ(out.status, 1);
  EXPECT_NE(out.message.find("-2 alpha > -1 violated"), std::string::npos);
}

TEST(Runner, ExitStatusContract) {
  const fs::path dir = scratch("status");
  RunOptions opt;
  opt.out_dir = (dir / "out").string();
  opt.config_path = write(dir, "c.json", kCounterexample);
  EXPECT_EQ(run(opt).status, 0);
  // a failed acceptance check is status 2, not an error
  opt.config_path = write(dir, "b.json", R"({"experiment": "barrier", "resolution": {"h": "1/32"},
      "options": {"alpha": 1, "eps": 0.5, "q": "printed"}})");
  EXPECT_EQ(run(opt).status, 2);
  opt.config_path = write(dir, "bad.json", "{\"experiment\": \"harnack\",,}");
  const auto bad = run(opt);
  EXPECT_EQ(bad.status, 1);
  EXPECT_NE(bad.message.find(":1:"), std::string::npos) << bad.message;
  opt.config_path = write(dir, "unknown.json", R"({"experiment": "warp"})");
  EXPECT_EQ(run(opt).status, 1);
  opt.config_path = (dir / "missing.json").string();
  EXPECT_EQ(run(opt).status, 1);
  // unwritable output
  opt.config_path = write(dir, "c.json", kCounterexample);
  write(dir, "blocker", "x");
  opt.out_dir = (dir / "blocker" / "sub").string();
  EXPECT_EQ(run(opt).status, 1);
}

TEST(Runner, HarnackIsDeterministicAndSeedOverrides) {
  const fs::path dir = scratch("determinism");
  RunOptions opt;
  opt.config_path = write(dir, "h.json", kHarnack);
  opt.out_dir = dir.string();
  opt.format = "json-lines";
  const auto a = run(opt);
  opt.threads = 1;
  const auto b = run(opt);
  ASSERT_EQ(a.status, 0);
  EXPECT_EQ(numeric_sections(a.report), numeric_sections(b.report));
  EXPECT_EQ(a.report.provenance["seed"], 7);
  opt.seed = 8;
  const auto c = run(opt);
  EXPECT_EQ(c.report.provenance["seed"], 8);
  EXPECT_NE(numeric_sections(a.report), numeric_sections(c.report));
  // regenerating from the echoed config reproduces the numbers
  RunOptions echo;
  echo.config_path = write(dir, "echo.json", a.report.config.dump());
  echo.out_dir = dir.string();
  EXPECT_EQ(numeric_sections(run(echo).report), numeric_sections(a.report));
}

TEST(Runner, PlotdataHasNamedCurves) {
  const fs::path dir = scratch("plot");
  RunOptions opt;
  opt.config_path = write(dir, "c.json", kCounterexample);
  opt.out_dir = dir.string();
  opt.format = "plotdata";
  const auto out = run(opt);
  ASSERT_EQ(out.status, 0);
  const std::string text = slurp(out.files.at(0));
  EXPECT_NE(text.find("# curve osc\n"), std::string::npos);
  EXPECT_NE(text.find("# curve bound\n"), std::string::npos);
}

TEST(Runner, EveryExperimentRunsOnItsExampleConfig) {
  const char* dir = std::getenv("HARNACK_LAB_CONFIGS");
  if (!dir) GTEST_SKIP() << "HARNACK_LAB_CONFIGS not set";
  for (const char* name : {"solve", "morrey_constant", "morrey_critical", "hoelder", "counterexample_bad_alpha"}) {
    RunOptions opt;
    opt.config_path = std::string(dir) + "/" + name + ".json";
    opt.out_dir = scratch(name).string();
    const auto out = run(opt);
    const int want = std::string(name) == "counterexample_bad_alpha" ? 1 : 0;
    EXPECT_EQ(out.status, want) << name << ": " << out.message;
  }
}

TEST(Cli, ExitCodes) {
  const char* cli = std::getenv("HARNACK_LAB_CLI");
  const char* configs = std::getenv("HARNACK_LAB_CONFIGS");
  if (!cli || !configs) GTEST_SKIP() << "CLI location not set";
  const fs::path dir = scratch("cli");
  auto status = [&](const std::string& args) {
    const std::string cmd = std::string(cli) + " " + args + " --out " + dir.string() + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
  };
  const std::string c = std::string(configs);
  EXPECT_EQ(status("morrey --config " + c + "/morrey_constant.json"), 0);
  EXPECT_EQ(status("run --config " + c + "/morrey_critical.json --format json-lines"), 0);
  EXPECT_EQ(status("barrier --config " + c + "/barrier_printed.json"), 2);
  EXPECT_EQ(status("counterexample --config " + c + "/counterexample_bad_alpha.json"), 1);
  EXPECT_EQ(status("harnack --config " + c + "/morrey_constant.json"), 1);
  EXPECT_EQ(status("solve --config " + c + "/solve.json --format nope"), 1);
  EXPECT_TRUE(fs::exists(dir / "morrey.jsonl"));
}
