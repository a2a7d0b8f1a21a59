#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "aggdiff/config.hpp"
#include "aggdiff/diagnostics.hpp"
#include "aggdiff/integrate.hpp"
#include "aggdiff/kernel.hpp"

namespace aggdiff {

std::string_view software_version();

// ---------------------------------------------------------------------------
// presets

/// fig-scalar1..4, fig-system1..2, small-mass, heat-smooth, aggregation-smooth, heat-indicator.
std::vector<std::string> preset_names();

/// Config text of a preset. Throws ConfigError for unknown names.
std::string_view preset_text(std::string_view name);

/// Applies "key=value" (value in config syntax) to a flat config.
void apply_override(nlohmann::json& flat, std::string_view assignment);

RunConfig preset_config(std::string_view name, const std::vector<std::string>& overrides = {});
RunConfig file_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

// ---------------------------------------------------------------------------
// simulation

struct Snapshot {
  double t = 0.0;
  std::vector<CellField> fields;
  std::vector<CellField> potentials;  // xi_i
};

struct SimulationResult {
  RunConfig config;
  HypothesisReport hypotheses;
  EnergyWeights weights;
  RunReport report;
  std::vector<DiagnosticsRecord> diagnostics;
  std::vector<Snapshot> snapshots;
  SystemState final_state;  // last accepted state (the abort state when aborted)
  bool aborted = false;
  std::string abort_message;
  double seconds = 0.0;
};

/// Runs a configuration in memory. NumericalErrors end the run with aborted = true.
SimulationResult simulate(const RunConfig& cfg, std::ostream* progress = nullptr);

Snapshot make_snapshot(const SystemState& state);

/// `x,u1[,u2,...]` (or `x,xi1,...` for potentials), 17 significant digits.
void write_fields_csv(const std::filesystem::path& path, const std::vector<CellField>& fields,
                      std::string_view column_prefix);

nlohmann::json to_json(const KernelAnalysis& a);
nlohmann::json to_json(const BalanceResult& b);  // witness 1-based
nlohmann::json to_json(const HypothesisReport& h);
nlohmann::json to_json(const RunReport& r);

struct RunDirectoryResult {
  int exit_code = 0;  // 0 ok, 3 numerical abort
  std::filesystem::path directory;
  std::optional<std::filesystem::path> abort_state;
  SimulationResult result;
};

/**
 * Runs and writes `snapshots/t_<t>.csv`, `snapshots/xi_<t>.csv`,
 * `diagnostics.csv` and `report.json` into `out_dir`. On a numerical abort
 * the last accepted state goes to `abort_state.csv` and exit_code is 3.
 */
RunDirectoryResult run_to_directory(const RunConfig& cfg, const std::filesystem::path& out_dir,
                                    std::ostream* progress = nullptr);

/// Independent runs on a pool of `jobs` threads; one output directory per config.
std::vector<RunDirectoryResult> run_sweep(const std::vector<RunConfig>& cfgs,
                                          const std::vector<std::filesystem::path>& out_dirs,
                                          std::size_t jobs);

// ---------------------------------------------------------------------------
// analysis commands

/// Kernel analysis as JSON; with mass and D also the scalar small-mass constant and theorem flags.
nlohmann::json analyze_kernel_report(const Kernel& k, double dx, std::optional<double> mass,
                                     std::optional<double> diffusion);

/// Alpha matrix from JSON (`[[..],[..]]`) or CSV text.
std::vector<std::vector<double>> parse_alpha_matrix(std::string_view text);

// ---------------------------------------------------------------------------
// convergence

struct ConvergenceRow {
  double cells_per_unit = 0.0;
  double dx = 0.0;
  std::optional<double> l1_difference;  // ||restrict(u_{k+1}) - u_k||_1; absent on the finest level
  std::optional<double> order;          // log2(e_{k-1} / e_k)
};

struct ConvergenceStudy {
  std::string name;
  double t_end = 0.0;
  std::vector<ConvergenceRow> rows;

  /// Orders that are present, coarse to fine.
  std::vector<double> orders() const;
};

/// Self-convergence in L1 over `levels` grids, each twice as fine. Needs levels >= 3.
ConvergenceStudy convergence_study(const RunConfig& base, std::size_t levels);

std::string format_convergence_table(const ConvergenceStudy& study);

}  // namespace aggdiff
