#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <vector>

#include "aggdiff/scheme.hpp"

namespace aggdiff {

struct TimeControls {
  double t_end = 0.0;
  double cfl = 0.25;
  double dt_max = 1e-2;
  double dt_min = 1e-12;
  std::vector<double> snapshot_times;  // sorted; times outside [0, t_end] are ignored
  std::size_t diagnostic_stride = 1;
  std::size_t progress_stride = 0;     // 0 disables the progress line

  void validate() const;
};

/// Largest step for which the explicit treatment of the log-diffusion term
/// stays linearly stable: number * dx^2 / max_i D_i.
double diffusive_dt_limit(const SchemeParams& params, const Grid1D& grid, double number = 0.4);

/// min(dt_max, cfl dx / max_speed); dt_max when nothing moves.
double stable_dt(double max_speed, double dx, const TimeControls& controls);

/// Evaluates the velocities of `state`; throws NumericalError when dt < dt_min.
double stable_dt(const SystemState& state, const TimeControls& controls);

struct StepStats {
  std::vector<double> clipped_mass;   // per species, mass added by clipping round-off negatives
  double most_negative_ratio = 0.0;   // min over stages of min(u)/max(u), 0 when never negative
};

/// Shu-Osher SSP-RK3. `initial` may carry the tendency at `state` when the
/// caller already has it (from stable_dt). Round-off negatives in the result
/// are clipped to zero and accounted in `stats`.
SystemState ssp_rk3_step(const SystemState& state, double dt, StepStats* stats = nullptr,
                         const Tendency* initial = nullptr);

struct RunReport {
  std::size_t steps = 0;
  double t_final = 0.0;
  double min_dt = 0.0;  // smallest CFL-limited step (steps shortened to hit output times excluded)
  double max_dt = 0.0;
  std::vector<double> initial_mass;
  std::vector<double> final_mass;
  std::vector<double> clipped_mass;
  double most_negative_ratio = 0.0;

  double max_relative_mass_drift() const;
};

struct RunSinks {
  std::function<void(const SystemState&)> on_snapshot;
  std::function<void(const SystemState&, double dt)> on_diagnostic;
  std::ostream* progress = nullptr;
};

/**
 * Advances `state` in place to controls.t_end.
 *
 * Snapshots fire exactly at the requested times (the step is shortened to
 * land on them). Diagnostics fire at t = 0, every diagnostic_stride steps and
 * at the final time. On a NumericalError `state` holds the last accepted step.
 */
RunReport run(SystemState& state, const TimeControls& controls, const RunSinks& sinks = {});

}  // namespace aggdiff
