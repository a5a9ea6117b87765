#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "echolab/cli/config.hpp"
#include "echolab/cli/plot.hpp"
#include "echolab/cli/run.hpp"
#include "echolab/errors.hpp"
#include "echolab/scramblon_model.hpp"

using namespace echolab;
using namespace echolab::cli;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(testing::TempDir()) / ("echolab_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Config, TimeLists) {
  EXPECT_EQ(parse_time_list("1..4"), (std::vector<double>{1, 2, 3, 4}));
  EXPECT_EQ(parse_time_list("0..1:0.5"), (std::vector<double>{0, 0.5, 1}));
  EXPECT_EQ(parse_time_list("0.5, 2,8"), (std::vector<double>{0.5, 2, 8}));
  EXPECT_EQ(parse_time_list("0..14:0.1").size(), 141u);
  EXPECT_TRUE(parse_time_list("").empty());
  EXPECT_THROW(parse_time_list("3..1"), DomainError);
  EXPECT_THROW(parse_time_list("0..1:0"), DomainError);
  EXPECT_THROW(parse_time_list("a,b"), DomainError);
  EXPECT_EQ(parse_int_list("1,2,4"), (std::vector<int>{1, 2, 4}));
}

TEST(Config, IniRoundTrip) {
  RunConfig cfg;
  cfg.mode = ErrorMode::both;
  cfg.n_list = {2};
  cfg.t_list = {0.1, 0.7};
  cfg.fix_kappa = 0.9;
  cfg.seed = 42;
  cfg.init_grid.kappa = {0.5};
  std::istringstream in(to_ini(cfg));
  RunConfig back;
  const auto keys = load_ini(in, back);
  EXPECT_EQ(to_ini(back), to_ini(cfg));
  EXPECT_FALSE(keys.empty());
}

TEST(Config, IniErrors) {
  RunConfig cfg;
  std::istringstream unknown("[model]\nkapa = 1\n");
  EXPECT_THROW(load_ini(unknown, cfg), ParseError);
  std::istringstream bad("[model]\nkappa = fast\n");
  EXPECT_THROW(load_ini(bad, cfg), ParseError);
  std::istringstream broken("[model\nkappa = 1\n");
  EXPECT_THROW(load_ini(broken, cfg), ParseError);
}

TEST(Config, OutputRootFromEnvironment) {
  RunConfig cfg;
  ::setenv(kOutputRootEnv, "/tmp/echolab-root", 1);
  EXPECT_EQ(resolve_output(cfg, "fit"), fs::path("/tmp/echolab-root/fit"));
  cfg.output = "explicit";
  EXPECT_EQ(resolve_output(cfg, "fit"), fs::path("explicit"));
  ::unsetenv(kOutputRootEnv);
  cfg.output.clear();
  EXPECT_EQ(resolve_output(cfg, "fit"), fs::path("fit"));
}

TEST(Plot, DeterministicAndWellFormed) {
  const auto p = scramblon::ScramblonParams::syk(0.866, 5.85e-4, 5.85e-4, 1.37);
  const auto table = scramblon::predict_table(ErrorMode::incoherent, {1, 2}, {0, 4, 8, 12}, p);
  std::ostringstream a, b;
  render_plot_svg({{table, LayerKind::curves, "model"}}, {}, a);
  render_plot_svg({{table, LayerKind::curves, "model"}}, {}, b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().rfind("<?xml", 0), 0u);
  EXPECT_NE(a.str().find("model incoherent n=2"), std::string::npos);
  EXPECT_NE(a.str().find("</svg>"), std::string::npos);
}

TEST(Plot, EmptyInputRejected) {
  std::ostringstream out;
  EXPECT_THROW(render_plot_svg({}, {}, out), DomainError);
  EXPECT_THROW(render_plot_svg({{EchoTable{}, LayerKind::points, ""}}, {}, out), DomainError);
}

TEST(Run, UsageErrors) {
  auto r = run({"predict", "--bogus", "1"});
  EXPECT_EQ(r.code, kUsageError);
  EXPECT_FALSE(r.err.empty());
  EXPECT_EQ(run({}).code, kUsageError);
  EXPECT_EQ(run({"frobnicate"}).code, kUsageError);
  EXPECT_EQ(run({"fit", "--output", scratch("noinput").string()}).code, kUsageError);
  EXPECT_EQ(run({"predict", "--kappa", "x", "--output", scratch("badnum").string()}).code,
            kUsageError);
  EXPECT_EQ(run({"predict", "--help"}).code, kSuccess);
}

TEST(Run, PredictWritesTableManifestAndReruns) {
  const auto dir = scratch("predict");
  const auto r = run({"predict", "--mode", "incoherent", "--n", "1,2,4", "--output", dir.string()});
  ASSERT_EQ(r.code, kSuccess) << r.err;
  const auto table = read_echo_csv(dir / "echo.csv");
  EXPECT_EQ(table.keys().size(), 3u);
  EXPECT_EQ(table.series(ErrorMode::incoherent, 4).size(), 141u);
  ASSERT_TRUE(fs::exists(dir / "plot.svg"));

  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["command"], "predict");
  EXPECT_EQ(manifest["seed"], 1);
  EXPECT_EQ(manifest["exit_code"], 0);

  const std::string first = slurp(dir / "echo.csv");
  ASSERT_EQ(run({"predict", "--config", (dir / "config.ini").string()}).code, kSuccess);
  EXPECT_EQ(slurp(dir / "echo.csv"), first);
}

TEST(Run, FlagsOverrideConfigFile) {
  const auto dir = scratch("override");
  fs::create_directories(dir);
  std::ofstream(dir / "in.ini") << "[model]\nkappa = 0.5\n[grid]\nn = 1\nt = 0..2\n";
  ASSERT_EQ(run({"predict", "--config", (dir / "in.ini").string(), "--kappa", "0.9", "--output",
                 (dir / "out").string()})
                .code,
            kSuccess);
  RunConfig used;
  load_ini(dir / "out" / "config.ini", used);
  EXPECT_DOUBLE_EQ(used.scramblon.kappa, 0.9);
  EXPECT_EQ(used.n_list, (std::vector<int>{1}));
  EXPECT_EQ(used.t_list.size(), 3u);
}

TEST(Run, SaddleIdentityWithoutErrors) {
  const auto dir = scratch("sd");
  const auto r = run({"sd-sim", "--V", "0", "--mode", "none", "--n", "1", "--t", "1..4",
                      "--dt-target", "0.05", "--output", dir.string()});
  ASSERT_EQ(r.code, kSuccess) << r.err;
  const auto table = read_echo_csv(dir / "echo.csv");
  ASSERT_EQ(table.rows.size(), 4u);
  for (const auto& row : table.rows) EXPECT_NEAR(row.F, 1.0, 1e-3);
  EXPECT_TRUE(fs::exists(dir / "points.csv"));
  EXPECT_FALSE(slurp(dir / "logs" / "n1_t4.log").empty());
}

TEST(Run, SaddleNumericalFailureExitCode) {
  const auto dir = scratch("sdfail");
  const auto r = run({"sd-sim", "--V", "0.01", "--n", "1", "--t", "2", "--max-iter", "1",
                      "--output", dir.string()});
  EXPECT_EQ(r.code, kNumericalFailure);
  EXPECT_FALSE(r.err.empty());
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["exit_code"], 2);
}

TEST(Run, OracleSmallSystem) {
  const auto dir = scratch("ed");
  const auto r = run({"ed-sim", "--N", "4", "--V", "0.05", "--n", "1,2", "--t", "0.5,1",
                      "--realizations", "3", "--seed", "7", "--output", dir.string()});
  ASSERT_EQ(r.code, kSuccess) << r.err;
  const auto table = read_echo_csv(dir / "echo.csv");
  ASSERT_EQ(table.rows.size(), 4u);
  for (const auto& row : table.rows) {
    EXPECT_EQ(row.source, Source::oracle);
    EXPECT_LE(row.F, 1.0 + 1e-9);
    EXPECT_TRUE(row.stderr_F.has_value());
  }
  EXPECT_EQ(table.metadata.at("seed"), "7");
}

TEST(Run, FitRoundTripsPredictOutput) {
  const auto dir = scratch("fit");
  ASSERT_EQ(run({"predict", "--output", (dir / "p").string(), "--no-plot"}).code, kSuccess);
  const auto r = run({"fit", "--input", (dir / "p" / "echo.csv").string(), "--output",
                      (dir / "f").string()});
  ASSERT_EQ(r.code, kSuccess) << r.err;
  const auto j = nlohmann::json::parse(slurp(dir / "f" / "fit.json"));
  EXPECT_NEAR(j["params"]["kappa"].get<double>() / 0.866, 1.0, 1e-6);
  EXPECT_NEAR(j["params"]["gamma_I"].get<double>() / 5.85e-4, 1.0, 1e-6);
  EXPECT_NEAR(j["params"]["delta_O"].get<double>() / 1.37, 1.0, 1e-6);
  EXPECT_EQ(j["converged"], true);
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "f" / "manifest.json"))["inputs"].size(), 1u);
}

TEST(Run, AnalyzeClosedFormBundle) {
  const auto dir = scratch("analyze");
  ASSERT_EQ(run({"predict", "--output", (dir / "i").string(), "--no-plot"}).code, kSuccess);
  ASSERT_EQ(run({"predict", "--mode", "coherent", "--n", "2", "--output", (dir / "c").string(),
                 "--no-plot"})
                .code,
            kSuccess);
  auto table = read_echo_csv(dir / "i" / "echo.csv");
  for (const auto& row : read_echo_csv(dir / "c" / "echo.csv").rows) table.rows.push_back(row);
  write_echo_csv(table, dir / "all.csv");

  const auto r = run({"analyze", "--input", (dir / "all.csv").string(), "--output",
                      (dir / "a").string()});
  ASSERT_EQ(r.code, kSuccess) << r.err;
  const auto j = nlohmann::json::parse(slurp(dir / "a" / "analysis.json"));
  EXPECT_TRUE(j["crossover"]["coherent"].get<bool>());
  EXPECT_NEAR(j["coherent_fit"]["params"]["gamma_c"].get<double>() / 5.85e-4, 1.0, 1e-5);
  EXPECT_TRUE(fs::exists(dir / "a" / "exponent.csv"));
}
