#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "aggdiff/error.hpp"
#include "aggdiff/runner.hpp"

using namespace aggdiff;
namespace fs = std::filesystem;

TEST_CASE("presets carry the published parameters") {
  struct Expect {
    const char* name;
    double L;
    std::vector<std::vector<double>> alpha;
  };
  const Expect table[] = {
      {"fig-scalar1", 12, {{2}}},
      {"fig-scalar2", 6, {{30}}},
      {"fig-scalar3", 12, {{20}}},
      {"fig-scalar4", 16, {{-20}}},
      {"fig-system1", 10, {{20, -10}, {-10, 2}}},
      {"fig-system2", 10, {{20, -10}, {5, 20}}},
  };
  for (const auto& e : table) {
    const RunConfig c = preset_config(e.name);
    CHECK(c.half_length == e.L);
    if (c.n_species == 1) {
      CHECK(c.alpha == std::vector<std::vector<double>>{{1.0}});
      CHECK(c.kernel_base["alpha"] == e.alpha[0][0]);
    } else {
      CHECK(c.alpha == e.alpha);
      CHECK(c.kernel_base["alpha"] == 1.0);
    }
    CHECK(c.cells_per_unit == 100.0);
    for (double d : c.diffusion) CHECK(d == 0.25);
    for (const auto& s : c.initial) {
      CHECK(s.ell == 4.0);
      CHECK(s.mass == 1.0);
    }
    CHECK(c.kernel_base["R"] == 1.0);
  }
  CHECK_THROWS_AS(preset_config("fig-nope"), ConfigError);
  CHECK(preset_names().size() == 10);
}

TEST_CASE("overrides") {
  const RunConfig c = preset_config("fig-scalar1", {"time.t_end=3", "time.snapshot_times=[0, 3]"});
  CHECK(c.t_end == 3.0);
  CHECK(c.snapshot_times == std::vector<double>{0, 3});
  CHECK_THROWS_AS(preset_config("fig-scalar1", {"time.t_end"}), ConfigError);
  CHECK_THROWS_AS(preset_config("fig-scalar1", {"time.bogus=1"}), ConfigError);
}

TEST_CASE("analyze-kernel report") {
  const auto j = analyze_kernel_report(Kernel::tophat(2.0, 1.0), 0.01, std::nullopt, std::nullopt);
  CHECK(j["tv_norm"] == 2.0);
  CHECK(j["symmetric"] == true);
  CHECK(j["compact_support"] == true);
  CHECK_FALSE(j.contains("c"));
  const auto m = analyze_kernel_report(Kernel::tophat(0.4, 1.0), 0.01, 1.0, 0.25);
  CHECK(m["small_mass"] == true);
  CHECK(m["c"].get<double>() == doctest::Approx(0.05));
}

TEST_CASE("alpha matrix input") {
  CHECK(parse_alpha_matrix("[[20, -10], [-10, 2]]") == std::vector<std::vector<double>>{{20, -10}, {-10, 2}});
  CHECK(parse_alpha_matrix("20,-10\n5,20\n") == std::vector<std::vector<double>>{{20, -10}, {5, 20}});
  CHECK_THROWS_AS(parse_alpha_matrix("1,2\n3\n"), ConfigError);
  CHECK_THROWS_AS(parse_alpha_matrix("1,x\n3,4\n"), ConfigError);
  CHECK_THROWS_AS(parse_alpha_matrix(""), ConfigError);
  const auto w = to_json(solve_detailed_balance(parse_alpha_matrix("20,-10\n5,20\n")));
  CHECK(w["witness"] == nlohmann::json({1, 2}));
}

TEST_CASE("run directory layout") {
  const fs::path dir = fs::temp_directory_path() / "aggdiff_runner_test";
  fs::remove_all(dir);
  const RunConfig c = preset_config("fig-system2", {"domain.L=3", "domain.cells_per_unit=20", "initial.ell=1",
                                                    "time.t_end=0.5", "time.snapshot_times=[0, 0.25, 0.5]"});
  const RunDirectoryResult r = run_to_directory(c, dir);
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(dir / "snapshots/t_0.csv"));
  CHECK(fs::exists(dir / "snapshots/t_0.25.csv"));
  CHECK(fs::exists(dir / "snapshots/xi_0.5.csv"));
  CHECK(fs::exists(dir / "diagnostics.csv"));

  std::ifstream snap(dir / "snapshots/t_0.5.csv");
  std::string header;
  std::getline(snap, header);
  CHECK(header == "x,u1,u2");
  std::size_t rows = 0;
  for (std::string line; std::getline(snap, line);) ++rows;
  CHECK(rows == 120);

  std::ifstream rep(dir / "report.json");
  const auto j = nlohmann::json::parse(rep);
  CHECK(j["status"] == "completed");
  CHECK(j["software"]["version"] == std::string(software_version()));
  CHECK(j["hypotheses"]["detailed_balance"]["balanced"] == false);
  CHECK(j["small_mass_constants"].size() == 2);
  CHECK(j["theorems"]["arbitrary_mass_existence"] == false);
  CHECK(j["config"]["domain"]["L"] == 3.0);
  CHECK(j["u_ess"] == 1e-4);
  CHECK(j["snapshots"].size() == 3);

  std::ifstream diag(dir / "diagnostics.csv");
  std::getline(diag, header);
  CHECK(header.rfind("t,dt,mass_1,mass_2,", 0) == 0);
  std::string last;
  for (std::string line; std::getline(diag, line);) last = line;
  CHECK(last.substr(last.size() - 8) == "violated");
  fs::remove_all(dir);
}

TEST_CASE("numerical abort writes the state") {
  const fs::path dir = fs::temp_directory_path() / "aggdiff_abort_test";
  fs::remove_all(dir);
  const RunConfig c = preset_config("fig-scalar2", {"domain.cells_per_unit=20", "time.t_end=1", "time.dt_max=1e-3",
                                                    "time.dt_min=4e-4"});
  const RunDirectoryResult r = run_to_directory(c, dir);
  CHECK(r.exit_code == 3);
  REQUIRE(r.abort_state.has_value());
  CHECK(fs::exists(*r.abort_state));
  std::ifstream rep(dir / "report.json");
  const auto j = nlohmann::json::parse(rep);
  CHECK(j["status"] == "aborted");
  CHECK(j["abort"]["state_file"] == "abort_state.csv");
  fs::remove_all(dir);
}

TEST_CASE("convergence study") {
  CHECK_THROWS_AS(convergence_study(preset_config("heat-smooth"), 2), InvalidParameter);
  const ConvergenceStudy s = convergence_study(preset_config("heat-smooth", {"time.t_end=0.1"}), 3);
  REQUIRE(s.rows.size() == 3);
  CHECK(s.rows[0].l1_difference.has_value());
  CHECK_FALSE(s.rows[2].l1_difference.has_value());
  REQUIRE(s.orders().size() == 1);
  CHECK(s.orders()[0] > 1.8);
  CHECK(format_convergence_table(s).find("order") != std::string::npos);
}

TEST_CASE("sweep runs independent configs") {
  const fs::path root = fs::temp_directory_path() / "aggdiff_sweep_test";
  fs::remove_all(root);
  std::vector<RunConfig> cfgs;
  std::vector<fs::path> dirs;
  for (const char* a : {"1", "2"}) {
    cfgs.push_back(preset_config("heat-smooth", {std::string("time.t_end=0.0") + a}));
    dirs.push_back(root / a);
  }
  const auto res = run_sweep(cfgs, dirs, 2);
  REQUIRE(res.size() == 2);
  CHECK(res[1].result.report.t_final == doctest::Approx(0.02));
  CHECK(fs::exists(root / "1/report.json"));
  fs::remove_all(root);
}
