#include "aggdiff/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "aggdiff/error.hpp"

namespace aggdiff {

void TimeControls::validate() const {
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw InvalidParameter("time: t_end must be non-negative");
  if (!(cfl > 0.0 && cfl <= 1.0)) throw InvalidParameter("time: cfl must lie in (0, 1]");
  if (!(dt_min > 0.0 && dt_min < dt_max)) throw InvalidParameter("time: need 0 < dt_min < dt_max");
  if (!std::is_sorted(snapshot_times.begin(), snapshot_times.end())) {
    throw InvalidParameter("time: snapshot_times must be sorted");
  }
  if (diagnostic_stride == 0) throw InvalidParameter("time: diagnostic_stride must be positive");
}

double diffusive_dt_limit(const SchemeParams& params, const Grid1D& grid, double number) {
  const double dmax = *std::max_element(params.diffusion.begin(), params.diffusion.end());
  return number * grid.dx() * grid.dx() / dmax;
}

double stable_dt(double max_speed, double dx, const TimeControls& controls) {
  if (!(max_speed > 0.0)) return controls.dt_max;
  return std::min(controls.dt_max, controls.cfl * dx / max_speed);
}

namespace {

double checked_dt(double max_speed, double dx, const TimeControls& controls) {
  const double dt = stable_dt(max_speed, dx, controls);
  if (dt < controls.dt_min) {
    throw NumericalError("time step collapsed: dt=" + std::to_string(dt) + " below dt_min=" +
                         std::to_string(controls.dt_min));
  }
  return dt;
}

double field_max(const CellField& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, v);
  return m;
}

void track_negatives(const std::vector<CellField>& fields, StepStats* stats) {
  if (stats == nullptr) return;
  for (const auto& f : fields) {
    double lo = 0.0;
    for (double v : f.values()) lo = std::min(lo, v);
    if (lo < 0.0) {
      const double top = field_max(f);
      const double ratio = top > 0.0 ? lo / top : -1.0;
      stats->most_negative_ratio = std::min(stats->most_negative_ratio, ratio);
    }
  }
}

void check_finite(const std::vector<CellField>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const auto v = fields[i].values();
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (!std::isfinite(v[j])) {
        throw NumericalError("non-finite density in species " + std::to_string(i + 1) + " at cell " +
                                 std::to_string(j),
                             static_cast<std::ptrdiff_t>(j));
      }
    }
  }
}

// out = (a * base + b * (stage + dt * rate)) / denom; integer weights keep fl(a/denom + b/denom) == 1.
void combine(std::vector<CellField>& out, double a, const std::vector<CellField>& base, double b,
             const std::vector<CellField>& stage, double dt, const std::vector<CellField>& rate, double denom) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto o = out[i].values();
    const auto u0 = base[i].values();
    const auto us = stage[i].values();
    const auto r = rate[i].values();
    for (std::size_t j = 0; j < o.size(); ++j) o[j] = (a * u0[j] + b * (us[j] + dt * r[j])) / denom;
  }
}

}  // namespace

double stable_dt(const SystemState& state, const TimeControls& controls) {
  return checked_dt(evaluate(state).max_speed, state.grid().dx(), controls);
}

SystemState ssp_rk3_step(const SystemState& state, double dt, StepStats* stats, const Tendency* initial) {
  if (stats != nullptr && stats->clipped_mass.size() != state.n_species()) {
    stats->clipped_mass.assign(state.n_species(), 0.0);
  }
  const Tendency l0 = initial != nullptr ? Tendency{} : evaluate(state);
  const std::vector<CellField>& rate0 = initial != nullptr ? initial->du_dt : l0.du_dt;

  SystemState stage = state;
  combine(stage.fields, 0.0, state.fields, 1.0, state.fields, dt, rate0, 1.0);
  track_negatives(stage.fields, stats);

  const Tendency l1 = evaluate(stage);
  SystemState stage2 = state;
  combine(stage2.fields, 3.0, state.fields, 1.0, stage.fields, dt, l1.du_dt, 4.0);
  track_negatives(stage2.fields, stats);

  const Tendency l2 = evaluate(stage2);
  SystemState next = state;
  combine(next.fields, 1.0, state.fields, 2.0, stage2.fields, dt, l2.du_dt, 3.0);
  check_finite(next.fields);
  track_negatives(next.fields, stats);

  for (std::size_t i = 0; i < next.fields.size(); ++i) {
    auto v = next.fields[i].values();
    double added = 0.0;
    for (double& x : v) {
      if (x < 0.0) {
        added -= x;
        x = 0.0;
      }
    }
    if (stats != nullptr) stats->clipped_mass[i] += added * state.grid().dx();
  }
  next.t = state.t + dt;
  return next;
}

double RunReport::max_relative_mass_drift() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < initial_mass.size(); ++i) {
    const double m0 = initial_mass[i];
    const double drift = std::abs(final_mass[i] - m0);
    worst = std::max(worst, m0 != 0.0 ? drift / std::abs(m0) : drift);
  }
  return worst;
}

RunReport run(SystemState& state, const TimeControls& controls, const RunSinks& sinks) {
  controls.validate();
  RunReport report;
  const std::size_t species = state.n_species();
  for (const auto& f : state.fields) report.initial_mass.push_back(mass(f));
  report.clipped_mass.assign(species, 0.0);

  const double t_end = controls.t_end;
  std::vector<double> targets;
  for (double t : controls.snapshot_times) {
    if (t >= state.t && t <= t_end && (targets.empty() || t > targets.back())) targets.push_back(t);
  }
  std::size_t next_target = 0;
  auto emit_due_snapshots = [&] {
    while (next_target < targets.size() && targets[next_target] <= state.t) {
      if (sinks.on_snapshot) sinks.on_snapshot(state);
      ++next_target;
    }
  };

  if (sinks.on_diagnostic) sinks.on_diagnostic(state, 0.0);
  emit_due_snapshots();

  const double dx = state.grid().dx();
  StepStats stats;
  stats.clipped_mass.assign(species, 0.0);
  double last_dt = 0.0;
  bool have_min = false;
  bool diagnostic_pending = false;

  while (state.t < t_end) {
    Tendency l0 = evaluate(state);
    const double cfl_dt = checked_dt(l0.max_speed, dx, controls);
    double stop = t_end;
    if (next_target < targets.size()) stop = std::min(stop, targets[next_target]);
    double dt = cfl_dt;
    bool lands = false;
    if (state.t + dt >= stop || stop - (state.t + dt) < 1e-12 * std::max(1.0, stop)) {
      dt = stop - state.t;
      lands = true;
    }
    if (!lands) {
      report.min_dt = have_min ? std::min(report.min_dt, dt) : dt;
      have_min = true;
    }
    report.max_dt = std::max(report.max_dt, dt);

    SystemState next = ssp_rk3_step(state, dt, &stats, &l0);
    if (lands) next.t = stop;
    state = std::move(next);
    ++report.steps;
    last_dt = dt;

    diagnostic_pending = true;
    if (report.steps % controls.diagnostic_stride == 0) {
      if (sinks.on_diagnostic) sinks.on_diagnostic(state, dt);
      diagnostic_pending = false;
    }
    emit_due_snapshots();

    if (sinks.progress != nullptr && controls.progress_stride > 0 &&
        report.steps % controls.progress_stride == 0) {
      double err = 0.0;
      for (std::size_t i = 0; i < species; ++i) {
        const double m0 = report.initial_mass[i];
        const double e = std::abs(mass(state.fields[i]) - m0);
        err = std::max(err, m0 != 0.0 ? e / m0 : e);
      }
      *sinks.progress << "t=" << state.t << " dt=" << dt << " mass_err=" << err << '\n';
    }
  }
  if (diagnostic_pending && sinks.on_diagnostic) sinks.on_diagnostic(state, last_dt);

  report.t_final = state.t;
  report.clipped_mass = stats.clipped_mass;
  report.most_negative_ratio = stats.most_negative_ratio;
  for (const auto& f : state.fields) report.final_mass.push_back(mass(f));
  return report;
}

}  // namespace aggdiff
