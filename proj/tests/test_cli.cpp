#include "rfsbound/runner.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace rfsbound;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rfs_bound_cli_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

int exe(const std::string& args, const fs::path& err_file = {}) {
  std::string cmd = std::string(RFS_BOUND_EXE) + " " + args + " > /dev/null";
  cmd += err_file.empty() ? " 2> /dev/null" : " 2> " + err_file.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("parse_config_text") {
  CHECK(parse_config_text("", "f").empty());
  const auto s = parse_config_text("# comment\n pd = 0.7  # trailing\n\nr=0.9\npd = 0.6\n", "f");
  REQUIRE(s.size() == 3);
  CHECK(s[0].key == "pd");
  CHECK(s[0].value == "0.7");
  CHECK(s[0].origin == "f:2");
  CHECK(s[2].origin == "f:5");
  CHECK_THROWS_AS(parse_config_text("nonsense\n", "f"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("pd = 0.5\ncolour = red\n", "f"), doctest::Contains("f:2"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("pd =\n", "f"), ConfigError);
}

TEST_CASE("resolve_config") {
  RunConfig c = resolve_config(Mode::RfsBound, {});
  CHECK(c.scenario.kind == ScenarioKind::LinearCV);
  CHECK(c.scenario.params.pd == 0.8);

  c = resolve_config(Mode::RfsBound, parse_config_text("pd = 0.7\npd = 0.6\n", "f"));
  CHECK(c.scenario.params.pd == 0.6);

  CHECK_THROWS_WITH_AS(resolve_config(Mode::RfsBound, parse_config_text("pd = 1.0\n", "f")),
                       doctest::Contains("'pd' at f:1"), ConfigError);
  CHECK_THROWS_AS(resolve_config(Mode::RfsBound, parse_config_text("scans = 25\n", "f")), ConfigError);
  CHECK_THROWS_AS(resolve_config(Mode::RfsBound, parse_config_text("prune_eps = 0.01\n", "f")), ConfigError);
  CHECK_THROWS_AS(resolve_config(Mode::RfsBound, parse_config_text("omega_deg = 1\n", "f")), ConfigError);
  CHECK_THROWS_AS(resolve_config(Mode::RfsBound, parse_config_text("scenario = bearings\nsigma_x = 3\n", "f")),
                  ConfigError);
  CHECK_THROWS_AS(resolve_config(Mode::RfsBound, parse_config_text("scenario = radar\n", "f")), ConfigError);
  CHECK_THROWS_AS(resolve_config(Mode::RfsBound, parse_config_text("target = 1,2,3\n", "f")), ConfigError);
  CHECK_THROWS_AS(resolve_config(Mode::RfsBound, parse_config_text("pd = abc\n", "f")), ConfigError);

  c = resolve_config(Mode::RfsBound, parse_config_text("e_scale = 2\n", "f"));
  CHECK(c.scenario.params.e0 == StateVec(200, 10, 200, 10));
  CHECK(c.scenario.params.e1 == StateVec(200, 10, 200, 10));

  c = resolve_config(Mode::Compare, parse_config_text("scenario = bearings\nsigma_z_deg = 2\nomega_deg = 0.5\n"
                                                      "target = 1,2,3,4\n", "f"));
  CHECK(c.scenario.kind == ScenarioKind::BearingsOnly);
  CHECK(c.scenario.initial_target == StateVec(1, 2, 3, 4));
  CHECK(c.scenario.sensor_cov(0, 0) == doctest::Approx(std::pow(2.0 * M_PI / 180.0, 2)));
  CHECK(*c.scenario.omega == doctest::Approx(0.5 * M_PI / 180.0));
}

TEST_CASE("render_csv schema") {
  ScenarioSpec s = linear_default();
  s.scans = 3;
  const BoundSeries b = rfs_bound_series(s, 3);
  const BoundSeries e = enum_pcrlb_series(s, 3);
  std::string csv = render_csv(b, nullptr, nullptr);
  CHECK(csv.rfind("scan,pr_mass_kept,rmse_pos_x,rmse_vel_x,rmse_pos_y,rmse_vel_y\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  csv = render_csv(b, &e, nullptr);
  CHECK(csv.find(",enum_rmse_pos_x,enum_rmse_vel_x,enum_rmse_pos_y,enum_rmse_vel_y\n") != std::string::npos);
  MonteCarloSeries mc;
  mc.per_scan.resize(3);
  csv = render_csv(b, nullptr, &mc);
  CHECK(csv.find(",mc_rmse_pos_x,mc_rmse_vel_x,mc_rmse_pos_y,mc_rmse_vel_y,mc_trace,mc_trace_se\n") !=
        std::string::npos);
}

TEST_CASE("exit codes and single-line errors") {
  const fs::path err = scratch("err.txt");
  CHECK(exe("rfs --pd 1.0", err) == 2);
  const std::string text = slurp(err);
  CHECK(text.rfind("ConfigError: ", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1);
  CHECK(exe("rfs --config /nonexistent/file.cfg") == 2);
  CHECK(exe("rfs --out /nonexistent/dir/x.csv") == 4);
  CHECK(exe("bogus") == 2);
  CHECK(exe("rfs --scans 24 --scenario bearings --r 0.9") == 3);
  CHECK(exe("rfs --scans 3") == 0);
}

TEST_CASE("config file with flag override, CSV and manifest") {
  const fs::path cfg = scratch("run.cfg");
  std::ofstream(cfg) << "# compare run\npd = 0.7\nr = 0.9\nscans = 4\n";
  const fs::path out = scratch("run.csv");
  REQUIRE(exe("compare --config " + cfg.string() + " --pd 0.9 --out " + out.string()) == 0);
  const std::string csv = slurp(out);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  const auto manifest = nlohmann::json::parse(slurp(out.string() + ".manifest.json"));
  CHECK(manifest["runs"][0]["config"]["pd"] == 0.9);
  CHECK(manifest["runs"][0]["config"]["r"] == 0.9);
  CHECK(manifest["runs"][0]["config"]["mode"] == "compare");
  CHECK(manifest.contains("version"));
  CHECK(manifest.contains("wall_time_s"));
  CHECK(manifest["runs"][0]["dropped_probability_mass"] == 0.0);
}

TEST_CASE("pruned run records the dropped mass") {
  const fs::path out = scratch("pruned.csv");
  REQUIRE(exe("rfs --r 0.9 --prune-eps 1e-4 --out " + out.string()) == 0);
  const auto manifest = nlohmann::json::parse(slurp(out.string() + ".manifest.json"));
  CHECK(manifest["runs"][0]["dropped_probability_mass"].get<double>() > 0.0);
}

TEST_CASE("figure grids") {
  const fs::path dir = scratch("fig2");
  REQUIRE(exe("compare --figure 2 --out " + dir.string()) == 0);
  CHECK(fs::exists(dir / "fig2_pd0.7.csv"));
  CHECK(fs::exists(dir / "fig2_pd0.9.csv"));
  const fs::path dir3 = scratch("fig3");
  REQUIRE(exe("rfs --figure 3 --scans 5 --out " + dir3.string()) == 0);
  for (const char* r : {"1", "0.95", "0.9"}) {
    const std::string csv = slurp(dir3 / ("fig3_r" + std::string(r) + ".csv"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  }
  const auto m = nlohmann::json::parse(slurp((dir3 / "fig3_r0.9.csv").string() + ".manifest.json"));
  CHECK(m["runs"][0]["config"]["e_scale"] == 2.0);
  CHECK(exe("rfs --figure 4 --out " + dir.string()) == 2);
  CHECK(exe("rfs --figure 1") == 2);
}

TEST_CASE("seeded Monte Carlo runs are byte-identical") {
  const fs::path a = scratch("mc_a.csv");
  const fs::path b = scratch("mc_b.csv");
  REQUIRE(exe("mc --runs 20 --seed 7 --scans 4 --out " + a.string()) == 0);
  REQUIRE(exe("mc --runs 20 --seed 7 --scans 4 --out " + b.string()) == 0);
  CHECK(slurp(a) == slurp(b));
}
