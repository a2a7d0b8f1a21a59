#include <doctest.h>

#include <cmath>

#include "aggdiff/error.hpp"
#include "aggdiff/integrate.hpp"

using namespace aggdiff;

namespace {

SystemState heat_state(std::size_t n, double sigma) {
  const Grid1D g(4.0, n);
  SchemeParams p;
  p.diffusion = {0.25};
  return make_state({gaussian_initial_data(g, sigma, 1.0)}, p,
                    KernelMatrix::scaled(Kernel::tophat(0.0, 1.0), {{1.0}}));
}

TimeControls controls_for(const SystemState& s, double t_end) {
  TimeControls c;
  c.t_end = t_end;
  c.dt_max = diffusive_dt_limit(s.params, s.grid());
  c.dt_min = 1e-12;
  return c;
}

}  // namespace

TEST_CASE("step size rules") {
  TimeControls c;
  c.cfl = 0.25;
  c.dt_max = 0.1;
  CHECK(stable_dt(0.0, 0.01, c) == 0.1);
  CHECK(stable_dt(10.0, 0.01, c) == doctest::Approx(0.25 * 0.01 / 10.0));
  SchemeParams p;
  p.diffusion = {0.25, 0.5};
  CHECK(diffusive_dt_limit(p, Grid1D(1.0, 200)) == doctest::Approx(0.4 * 1e-4 / 0.5));
}

TEST_CASE("heat equation against the exact Gaussian") {
  // Far from the walls the solution stays Gaussian with variance sigma^2 + 2 D t.
  SystemState s = heat_state(320, 0.5);
  const TimeControls c = controls_for(s, 0.5);
  const RunReport r = run(s, c);
  CHECK(s.t == 0.5);
  const double var = 0.25 + 2.0 * 0.25 * 0.5;
  const Grid1D& g = s.grid();
  double err = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double x = g.center(j);
    const double exact = std::exp(-x * x / (2.0 * var)) / std::sqrt(2.0 * M_PI * var);
    err += std::abs(s.fields[0][j] - exact) * g.dx();
  }
  CHECK(err < 1e-4);
  CHECK(r.max_relative_mass_drift() < 1e-13);
  CHECK(r.most_negative_ratio == 0.0);
}

TEST_CASE("snapshots land exactly and diagnostics follow the stride") {
  SystemState s = heat_state(80, 0.5);
  TimeControls c = controls_for(s, 0.3);
  c.snapshot_times = {0.0, 0.1, 0.123, 0.3};
  c.diagnostic_stride = 10;
  std::vector<double> snaps;
  std::size_t diags = 0;
  RunSinks sinks;
  sinks.on_snapshot = [&](const SystemState& st) { snaps.push_back(st.t); };
  sinks.on_diagnostic = [&](const SystemState&, double) { ++diags; };
  const RunReport r = run(s, c, sinks);
  CHECK(snaps == std::vector<double>{0.0, 0.1, 0.123, 0.3});
  CHECK(diags == 1 + r.steps / 10 + (r.steps % 10 != 0 ? 1 : 0));
  CHECK(r.min_dt <= r.max_dt);
}

TEST_CASE("identical runs are bit-identical") {
  SystemState a = heat_state(100, 0.4);
  SystemState b = heat_state(100, 0.4);
  run(a, controls_for(a, 0.05));
  run(b, controls_for(b, 0.05));
  for (std::size_t j = 0; j < 100; ++j) CHECK(a.fields[0][j] == b.fields[0][j]);
}

TEST_CASE("collapsed time step aborts with the last accepted state") {
  const Grid1D g(2.0, 200);
  SchemeParams p;
  p.diffusion = {0.25};
  SystemState s = make_state({indicator_initial_data(g, 1.0, 1.0)}, p,
                             KernelMatrix::scaled(Kernel::tophat(30.0, 1.0), {{1.0}}));
  TimeControls c;
  c.t_end = 1.0;
  c.dt_max = 1e-3;
  c.dt_min = 5e-4;
  CHECK_THROWS_AS(run(s, c), NumericalError);
  CHECK(s.t == 0.0);
}

TEST_CASE("invalid controls") {
  SystemState s = heat_state(40, 0.5);
  TimeControls c = controls_for(s, 1.0);
  c.cfl = 0.0;
  CHECK_THROWS_AS(run(s, c), InvalidParameter);
  c = controls_for(s, 1.0);
  c.snapshot_times = {0.5, 0.1};
  CHECK_THROWS_AS(run(s, c), InvalidParameter);
}

TEST_CASE("system run conserves each species") {
  const Grid1D g(5.0, 500);
  SchemeParams p;
  p.diffusion = {0.25, 0.25};
  SystemState s = make_state({indicator_initial_data(g, 2.0, 1.0), indicator_initial_data(g, 2.0, 1.0)}, p,
                             KernelMatrix::scaled(Kernel::tophat(1.0, 1.0), {{20, -10}, {5, 20}}));
  TimeControls c;
  c.t_end = 0.5;
  c.dt_max = diffusive_dt_limit(p, g);
  const RunReport r = run(s, c);
  CHECK(r.max_relative_mass_drift() < 1e-12);
  CHECK(r.most_negative_ratio > -1e-14);
}
