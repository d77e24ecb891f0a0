#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <unistd.h>

#include "grl/cli.hpp"

using namespace grl;
using namespace grl::cli;
namespace fs = std::filesystem;

namespace {

const std::string kLeuk = GRL_DATA_DIR "/leukaemia.txt";

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("grl_cli_" + std::to_string(::getpid()))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  [[nodiscard]] std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

int run(const std::string& args) {
  const int status = std::system((std::string(GRL_CLI_PATH) + " " + args + " 2>/dev/null").c_str());
  return WEXITSTATUS(status);
}

std::size_t column(const CsvSection& s, const std::string& name) {
  for (std::size_t i = 0; i < s.columns.size(); ++i) {
    if (s.columns[i] == name) return i;
  }
  throw std::runtime_error("no column " + name);
}

}  // namespace

TEST(DataFile, ParsesSeparatorsAndComments) {
  std::istringstream in("# header\n1.5, 2 3\n\n4;5\t6 # trailing\n7e-1\n");
  const auto v = parse_data(in, "x");
  EXPECT_EQ(v, (std::vector<double>{1.5, 2, 3, 4, 5, 6, 0.7}));
}

TEST(DataFile, LineNumberedErrors) {
  std::istringstream bad("1 2\n3 abc\n");
  try {
    parse_data(bad, "d.txt");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("d.txt:2"), std::string::npos);
  }
  std::istringstream neg("1\n2\n-3\n");
  EXPECT_THROW(parse_data(neg, "n"), InputError);
  std::istringstream zero("0\n");
  EXPECT_THROW(parse_data(zero, "z"), InputError);
  std::istringstream nan("nan\n");
  EXPECT_THROW(parse_data(nan, "z"), InputError);
  EXPECT_THROW(load_sample("/nonexistent/file"), InputError);
}

TEST(Tables, CsvRoundTrip) {
  Table t{"grl.test", 3, {"a", "b", "c", "d"}, {}};
  t.rows.push_back({0.1, std::int64_t(7), std::string("x"), std::monostate{}});
  t.rows.push_back({1.0 / 3.0, std::int64_t(-2), std::string("y"), true});
  const auto secs = parse_csv(render({t}, Format::csv));
  ASSERT_EQ(secs.size(), 1u);
  EXPECT_EQ(secs[0].schema, "grl.test/3");
  EXPECT_EQ(secs[0].columns, t.columns);
  EXPECT_EQ(std::stod(secs[0].rows[0][0]), 0.1);
  EXPECT_EQ(std::stod(secs[0].rows[1][0]), 1.0 / 3.0);
  EXPECT_EQ(secs[0].rows[0][3], "");
  EXPECT_EQ(secs[0].rows[1][3], "true");
}

TEST(Tables, JsonRoundTrip) {
  Table t{"grl.test", 1, {"a", "b"}, {{1.0 / 3.0, std::monostate{}}, {NAN, std::string("z")}}};
  const auto j = nlohmann::json::parse(render({t}, Format::json));
  EXPECT_EQ(j["schema"], "grl.test");
  EXPECT_EQ(j["rows"][0]["a"].get<double>(), 1.0 / 3.0);
  EXPECT_TRUE(j["rows"][0]["b"].is_null());
  EXPECT_EQ(j["rows"][1]["a"], "nan");
}

TEST(Config, RejectsUnknownKeys) {
  RunConfig c;
  EXPECT_THROW(apply_config(c, nlohmann::json::parse(R"({"replicate": 5})")), InputError);
  EXPECT_THROW(apply_config(c, nlohmann::json::parse(R"({"thetas": [[1.5, 1]]})")), InputError);
  EXPECT_THROW(apply_config(c, nlohmann::json::parse(R"({"replicates": "x"})")), InputError);
  EXPECT_THROW(apply_config(c, nlohmann::json::parse("[1]")), InputError);
  apply_config(c, nlohmann::json::parse(
                      R"({"replicates": 5, "sample_sizes": [10, 20], "methods": ["mle", "MPSE"],
                          "thetas": [[2.5, 1.0]], "seed": 4, "format": "json", "start_at_truth": true})"));
  EXPECT_EQ(c.replicates, 5u);
  EXPECT_EQ(c.sample_sizes, (std::vector<std::size_t>{10, 20}));
  EXPECT_EQ(c.methods, (std::vector<Method>{Method::MLE, Method::MPSE}));
  EXPECT_EQ(c.thetas.at(0), GrlParams(2.5, 1.0));
  EXPECT_EQ(c.seed, 4u);
  EXPECT_EQ(c.format, Format::json);
  EXPECT_TRUE(c.start_at_truth);
}

TEST(Config, Validation) {
  RunConfig c;
  c.sample_sizes = {2};
  EXPECT_THROW(c.validate(), InputError);
  c = RunConfig{};
  c.bootstrap = -1;
  EXPECT_THROW(c.validate(), InputError);
  c = RunConfig{};
  c.estimate.starts = 0;
  EXPECT_THROW(c.validate(), InputError);
}

TEST(Grid, Parse) {
  const auto g = parse_grid("0.1:10:5:log");
  EXPECT_TRUE(g.log_scale);
  const auto v = g.values();
  ASSERT_EQ(v.size(), 5u);
  EXPECT_NEAR(v[2], 1.0, 1e-14);
  EXPECT_EQ(v.back(), 10.0);
  EXPECT_EQ(parse_grid("0:2:3").values(), (std::vector<double>{0, 1, 2}));
  EXPECT_THROW(parse_grid("0:10:5:log"), InputError);
  EXPECT_THROW(parse_grid("5:1:10"), InputError);
  EXPECT_THROW(parse_grid("1:2:1"), InputError);
  EXPECT_THROW(parse_grid("1:2"), InputError);
  EXPECT_THROW(parse_grid("a:2:3"), InputError);
  EXPECT_THROW(parse_grid("1:2:3:cubic"), InputError);
}

TEST(Commands, FitLeukaemiaAllMethods) {
  RunConfig c;
  c.threads = 1;
  const auto o = cmd_fit(load_sample(kLeuk), c);
  EXPECT_EQ(o.exit_code, kOk);
  const auto secs = parse_csv(o.text);
  ASSERT_EQ(secs.size(), 1u);
  ASSERT_EQ(secs[0].rows.size(), 8u);
  const auto& cvme = secs[0].rows[4];
  EXPECT_EQ(cvme[0], "CVME");
  EXPECT_NEAR(std::stod(cvme[column(secs[0], "lambda")]), 9.09894, 0.05 * 9.09894);
  EXPECT_NEAR(std::stod(cvme[column(secs[0], "alpha")]), 0.64955, 0.05 * 0.64955);
  EXPECT_EQ(cvme[column(secs[0], "ks_pvalue")], "");
}

TEST(Commands, FitPartialConvergenceExitsTwo) {
  RunConfig c;
  c.methods = {Method::MLE};
  c.estimate.max_iterations = 2;
  EXPECT_EQ(cmd_fit(load_sample(kLeuk), c).exit_code, kPartialConvergence);
}

TEST(Commands, GofFixedAndFitted) {
  RunConfig c;
  const Sample s = load_sample(kLeuk);
  const auto fixed = parse_csv(cmd_gof(s, c, GrlParams(14.6996, 0.77410), std::nullopt).text)[0];
  EXPECT_NEAR(std::stod(fixed.rows[0][column(fixed, "ks")]), 0.13637, 1e-4);
  EXPECT_THROW(column(fixed, "ks_pvalue"), std::runtime_error);
  const auto fitted = parse_csv(cmd_gof(s, c, std::nullopt, Method::MLE).text)[0];
  EXPECT_EQ(fitted.rows[0][0], "MLE");
  EXPECT_NEAR(std::stod(fitted.rows[0][column(fitted, "neg_loglik")]), 153.58031, 1e-4);
  c.bootstrap = 20;
  const auto boot = parse_csv(cmd_gof(s, c, std::nullopt, Method::MLE).text)[0];
  EXPECT_GT(std::stod(boot.rows[0][column(boot, "ks_pvalue")]), 0.0);
  EXPECT_THROW(cmd_gof(s, c, std::nullopt, std::nullopt), InputError);
}

TEST(Commands, GofNearBoundaryMatchesOneParameterPath) {
  RunConfig c;
  const Sample s = load_sample(kLeuk);
  const GrlParams p(2 + 1e-6, 1.0);
  const auto t = parse_csv(cmd_gof(s, c, p, std::nullopt).text)[0];
  EXPECT_NEAR(std::stod(t.rows[0][column(t, "neg_loglik")]), -log_likelihood(p, s), 1e-9);
  EXPECT_NEAR(std::stod(t.rows[0][column(t, "ks")]), ks_statistic(p, s), 1e-15);
}

TEST(Commands, CurvesColumnsConsistent) {
  const auto t = parse_csv(cmd_curves(GrlParams(2.5, 0.8), parse_grid("0:20:101"), Format::csv).text)[0];
  double prev_cdf = -1;
  for (const auto& r : t.rows) {
    const double pdfv = std::stod(r[1]), cdfv = std::stod(r[2]), sv = std::stod(r[3]), h = std::stod(r[4]);
    EXPECT_GE(cdfv, prev_cdf);
    prev_cdf = cdfv;
    if (std::stod(r[0]) > 0) {
      EXPECT_NEAR(h, pdfv / sv, 1e-10 * h);
    }
  }
}

TEST(Commands, TttOfLeukaemiaIsBelowDiagonal) {
  const auto t = parse_csv(cmd_ttt(load_sample(kLeuk), Format::csv).text)[0];
  EXPECT_EQ(t.rows.front()[1], "0");
  EXPECT_EQ(t.rows.back()[1], "1");
  // Value at the middle of the curve.
  const auto& mid = t.rows[t.rows.size() / 2];
  EXPECT_LT(std::stod(mid[1]), std::stod(mid[0]));
}

TEST(Commands, SimulateSmokeIsDeterministic) {
  RunConfig c;
  c.thetas = {{2.0, 2.5}};
  c.sample_sizes = {20};
  c.replicates = 1;
  c.methods = {Method::MLE, Method::MPSE};
  c.seed = 3;
  const auto a = cmd_simulate(c);
  const auto b = cmd_simulate(c);
  EXPECT_EQ(a.cells, b.cells);
  const auto secs = parse_csv(a.cells);
  ASSERT_EQ(secs.size(), 2u);
  EXPECT_EQ(secs[0].rows.size(), 2u);
  EXPECT_EQ(secs[1].schema, "grl.sim.ranks/1");
  EXPECT_EQ(secs[1].rows.back()[2], "overall_rank");
  const auto split = cmd_simulate(c, true);
  EXPECT_EQ(parse_csv(split.cells).size(), 1u);
  EXPECT_EQ(parse_csv(split.ranks).size(), 1u);
}

TEST(Binary, FitWritesFileAndIsReproducible) {
  TempDir d;
  ASSERT_EQ(run("fit " + kLeuk + " --methods MLE,MPSE --seed 5 --out " + d.file("a.csv")), 0);
  ASSERT_EQ(run("fit " + kLeuk + " --methods MLE,MPSE --seed 5 --out " + d.file("b.csv")), 0);
  EXPECT_EQ(slurp(d.file("a.csv")), slurp(d.file("b.csv")));
  EXPECT_EQ(slurp(d.file("a.csv")).rfind("# schema: grl.fit/1", 0), 0u);
}

TEST(Binary, InputErrorsExitOneWithoutOutput) {
  TempDir d;
  spit(d.file("empty.txt"), "# nothing here\n");
  EXPECT_EQ(run("fit " + d.file("empty.txt") + " --out " + d.file("o.csv")), 1);
  EXPECT_FALSE(fs::exists(d.file("o.csv")));
  spit(d.file("bad.txt"), "1 2\nx\n");
  EXPECT_EQ(run("fit " + d.file("bad.txt") + " --out " + d.file("o.csv")), 1);
  EXPECT_FALSE(fs::exists(d.file("o.csv")));
  EXPECT_EQ(run("fit /no/such/file --out " + d.file("o.csv")), 1);
  EXPECT_EQ(run("fit " + kLeuk + " --methods XYZ"), 1);
  EXPECT_EQ(run("fit " + kLeuk + " --format xml"), 1);
  EXPECT_EQ(run("curves --lambda 1.5 --alpha 1"), 1);
  EXPECT_EQ(run("curves --lambda 3 --alpha 1 --grid 5:1:3"), 1);
  EXPECT_EQ(run("bogus"), 1);
  EXPECT_FALSE(fs::exists(d.file("o.csv")));
}

TEST(Binary, PartialConvergenceExitsTwo) {
  TempDir d;
  EXPECT_EQ(run("fit " + kLeuk + " --methods MLE --max-iterations 2 --out " + d.file("p.csv")), 2);
  EXPECT_TRUE(fs::exists(d.file("p.csv")));
}

TEST(Binary, EnvironmentOverrides) {
  TempDir d;
  const std::string env = "GRL_FORMAT=json GRL_OUT=" + d.file("env.json") + " GRL_SEED=7 GRL_THREADS=2 ";
  const int status = std::system((env + GRL_CLI_PATH + " gof " + kLeuk + " --lambda 14.6996 --alpha 0.7741").c_str());
  ASSERT_EQ(WEXITSTATUS(status), 0);
  const auto j = nlohmann::json::parse(slurp(d.file("env.json")));
  EXPECT_EQ(j["schema"], "grl.gof");
  // Flags beat the environment.
  const int s2 = std::system(("GRL_FORMAT=json " + std::string(GRL_CLI_PATH) + " curves --lambda 3 --alpha 1 --grid 1:2:2 --format csv --out " +
                              d.file("c.csv")).c_str());
  ASSERT_EQ(WEXITSTATUS(s2), 0);
  EXPECT_EQ(slurp(d.file("c.csv")).rfind("# schema: grl.curves/1", 0), 0u);
}

TEST(Binary, SimulateConfigFile) {
  TempDir d;
  spit(d.file("cfg.json"),
       R"({"thetas": [[2.0, 2.5]], "sample_sizes": [20], "replicates": 1, "methods": ["MLE", "OLSE"], "seed": 1})");
  ASSERT_EQ(run("simulate --config " + d.file("cfg.json") + " --out " + d.file("s1.csv") + " --ranks-out " +
                d.file("r1.csv")), 0);
  ASSERT_EQ(run("simulate --config " + d.file("cfg.json") + " --out " + d.file("s2.csv") + " --ranks-out " +
                d.file("r2.csv")), 0);
  EXPECT_EQ(slurp(d.file("s1.csv")), slurp(d.file("s2.csv")));
  EXPECT_EQ(slurp(d.file("r1.csv")), slurp(d.file("r2.csv")));
  spit(d.file("bad.json"), R"({"replicatez": 1})");
  EXPECT_EQ(run("simulate --config " + d.file("bad.json") + " --out " + d.file("s3.csv")), 1);
  EXPECT_FALSE(fs::exists(d.file("s3.csv")));
}

TEST(Binary, InputFileUntouched) {
  const std::string before = slurp(kLeuk);
  ASSERT_EQ(run("fit " + kLeuk + " --methods MLE > /dev/null"), 0);
  EXPECT_EQ(slurp(kLeuk), before);
}
