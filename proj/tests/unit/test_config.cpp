#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "aggdiff/config.hpp"
#include "aggdiff/error.hpp"

using namespace aggdiff;
using nlohmann::json;

namespace {

std::string missing_key(const std::string& text) {
  try {
    run_config_from_flat(parse_flat_config(text));
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "";
}

const char* kMinimal = R"(
[domain]
L = 6
[species]
D = 0.25
[kernels]
base = { type = "tophat", alpha = 2, R = 1 }
[time]
t_end = 1
)";

}  // namespace

TEST_CASE("parser values") {
  const json f = parse_flat_config(R"(
# comment
name = "demo"   # trailing comment
[a]
x = 1.5
y = -2e-3
flag = true
s = "q\"uote"
list = [1, 2,
        3,]
nested = [[1, 2], [3, 4]]
t = { type = "tophat", alpha = 1, R = 0.5 }
b.c = 4
)");
  CHECK(f["name"] == "demo");
  CHECK(f["a.x"] == 1.5);
  CHECK(f["a.y"] == -2e-3);
  CHECK(f["a.flag"] == true);
  CHECK(f["a.s"] == "q\"uote");
  CHECK(f["a.list"] == json({1.0, 2.0, 3.0}));
  CHECK(f["a.nested"][1][0] == 3.0);
  CHECK(f["a.t"]["R"] == 0.5);
  CHECK(f["a.b.c"] == 4.0);
}

TEST_CASE("parser errors") {
  CHECK_THROWS_AS(parse_flat_config("x = 1\nx = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_flat_config("x = \"open\n"), ConfigError);
  CHECK_THROWS_AS(parse_flat_config("x = [1, 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_flat_config("x = 1 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_flat_config("x = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_value("{ a = 1, a = 2 }"), ConfigError);
}

TEST_CASE("validation names the offending key") {
  CHECK(missing_key("") == "domain.L");
  CHECK(missing_key("bogus = 1\n" + std::string(kMinimal)) == "bogus");
  CHECK(missing_key(std::string(kMinimal) + "bogus = 1\n") == "time.bogus");
  CHECK(missing_key(std::string(kMinimal) + "[scheme]\ntheta = 3\n") == "scheme.theta");
  CHECK(missing_key(std::string(kMinimal) + "[initial]\nell = 7\n") == "initial.ell");
  CHECK(missing_key(std::string(kMinimal) + "[scheme]\ncfl = 0\n") == "scheme.cfl");
  CHECK(missing_key("[domain]\nL = 6\n[species]\nn = 2\nD = [1, 1]\n[kernels]\n"
                    "base = { type = \"tophat\", alpha = 1, R = 1 }\n[time]\nt_end = 1\n") == "kernels.alpha");
  CHECK(missing_key("[domain]\nL = 6\n[species]\nn = 2\nD = [1, 1, 1]\n") == "species.D");
  CHECK(missing_key("[domain]\nL = 6\n[species]\nD = 1\n[kernels]\nbase = { type = \"gauss\" }\n") ==
        "kernels.base");
}

TEST_CASE("defaults and broadcasting") {
  const RunConfig c = run_config_from_flat(parse_flat_config(kMinimal));
  CHECK(c.half_length == 6.0);
  CHECK(c.cells_per_unit == 100.0);
  CHECK(c.n_species == 1);
  CHECK(c.initial.size() == 1);
  CHECK(c.initial[0].ell == 4.0);
  CHECK(c.theta == 2.0);
  CHECK(c.cfl == 0.25);
  CHECK(c.u_ess == 1e-4);
  CHECK(c.snapshot_times == std::vector<double>{0.0, 1.0});
  CHECK(c.alpha == std::vector<std::vector<double>>{{1.0}});

  const RunConfig s = run_config_from_flat(parse_flat_config(
      "[domain]\nL = 10\n[species]\nn = 2\nD = 0.5\n[initial]\nmass = [1, 2]\n[kernels]\n"
      "base = { type = \"tophat\", alpha = 1, R = 1 }\nalpha = [[1, 2], [2, 1]]\n[time]\nt_end = 250\n"));
  CHECK(s.diffusion == std::vector<double>{0.5, 0.5});
  CHECK(s.initial[1].mass == 2.0);
  CHECK(s.snapshot_times == std::vector<double>{0, 1, 2.7, 10, 100, 200, 250});
}

TEST_CASE("building a state") {
  const RunConfig c = run_config_from_flat(parse_flat_config(kMinimal));
  const SystemState s = build_state(c);
  CHECK(s.grid().size() == 1200);
  CHECK(mass(s.fields[0]) == doctest::Approx(1.0));
  const TimeControls tc = build_controls(c, s);
  CHECK(tc.dt_max == doctest::Approx(0.4 * 1e-4 / 0.25));
  CHECK(tc.t_end == 1.0);
}

TEST_CASE("kernel matrix of specs and sampled files") {
  const auto dir = std::filesystem::temp_directory_path() / "aggdiff_config_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "k.csv");
    f << "x,value\n-0.25,1\n0.25,1\n";
  }
  const Kernel k = kernel_from_spec(parse_config_value("{ type = \"sampled\", file = \"k.csv\" }"), dir);
  CHECK(k.integral(-1.0, 1.0) == doctest::Approx(1.0));
  CHECK(k.support_left() == doctest::Approx(-0.5));

  const RunConfig c = run_config_from_flat(
      parse_flat_config("[domain]\nL = 3\n[species]\nn = 2\nD = 1\n[initial]\nell = 1\n[kernels]\n"
                        "matrix = [[{ type = \"tophat\", alpha = 1, R = 1 }, { type = \"sampled\", file = \"k.csv\" }],\n"
                        "          [{ type = \"tophat\", alpha = 2, R = 0.5 }, { type = \"tophat\", alpha = 0, R = 1 }]]\n"
                        "[time]\nt_end = 0.1\n"),
      dir);
  const KernelMatrix m = build_kernels(c);
  CHECK_FALSE(m.base().has_value());
  CHECK(m(1, 0).integral(-1, 1) == doctest::Approx(-2.0));

  {
    std::ofstream f(dir / "bad.csv");
    f << "0,1\n0.5,1\n0.7,1\n";
  }
  CHECK_THROWS_AS(load_sampled_kernel(dir / "bad.csv"), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("resolved config round-trips key values") {
  const json j = to_json(run_config_from_flat(parse_flat_config(kMinimal)));
  CHECK(j["domain"]["L"] == 6.0);
  CHECK(j["kernels"]["base"]["alpha"] == 2.0);
  CHECK(j["time"]["dt_max"].is_null());
}
