#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "aggdiff/grid.hpp"
#include "aggdiff/integrate.hpp"
#include "aggdiff/kernel.hpp"
#include "aggdiff/scheme.hpp"

namespace aggdiff {

/**
 * Parses flat-key TOML-style text into a JSON object keyed by dotted path.
 *
 *     # comment
 *     [domain]
 *     L = 12
 *     time.snapshot_times = [0, 1, 2.7]
 *     kernels.base = { type = "tophat", alpha = 1.0, R = 1.0 }
 *
 * Values are numbers, "strings", true/false, [arrays] (may span lines) and
 * { inline = tables }. Duplicate keys are errors. Throws ConfigError.
 */
nlohmann::json parse_flat_config(std::string_view text);

/// Parses a single value, e.g. an inline kernel table given on the command line.
nlohmann::json parse_config_value(std::string_view text);

struct InitialSpec {
  std::string type = "indicator";  // "indicator" or "gaussian"
  double ell = 4.0;
  double mass = 1.0;
  double sigma = 0.5;
};

struct RunConfig {
  std::string name;  // preset name or config file stem

  double half_length = 0.0;
  double cells_per_unit = 100.0;

  std::size_t n_species = 1;
  std::vector<double> diffusion;
  std::vector<InitialSpec> initial;

  // Either a base kernel with an alpha matrix, or a full matrix of kernel specs.
  nlohmann::json kernel_base;                // null when `kernel_matrix` is used
  std::vector<std::vector<double>> alpha;
  nlohmann::json kernel_matrix;              // n x n array of inline tables, or null

  double theta = 2.0;
  double cfl = 0.25;
  std::optional<double> u_floor;
  double u_ess = 1e-4;

  double t_end = 0.0;
  std::vector<double> snapshot_times;
  std::size_t diagnostic_stride = 100;
  std::optional<double> dt_max;
  double dt_min = 1e-12;
  double diffusion_number = 0.4;
  std::size_t progress_stride = 0;

  std::filesystem::path output_directory = "run";
  std::vector<std::string> formats = {"csv"};
  std::filesystem::path base_directory = ".";  // resolves relative kernel file paths
};

/// Validates every key; unknown keys and missing required keys are ConfigErrors.
RunConfig run_config_from_flat(const nlohmann::json& flat, const std::filesystem::path& base_dir = ".");

RunConfig load_run_config(const std::filesystem::path& path);

/// Fully resolved configuration (defaults filled in) as nested JSON.
nlohmann::json to_json(const RunConfig& cfg);

/// Kernel from `{ type = "tophat", alpha, R }` or `{ type = "sampled", file }`.
Kernel kernel_from_spec(const nlohmann::json& spec, const std::filesystem::path& base_dir = ".");

/// Reads a two-column x,value CSV of cell-centred samples on a uniform grid.
Kernel load_sampled_kernel(const std::filesystem::path& path);

Grid1D build_grid(const RunConfig& cfg);
KernelMatrix build_kernels(const RunConfig& cfg);
SystemState build_state(const RunConfig& cfg);
TimeControls build_controls(const RunConfig& cfg, const SystemState& state);

}  // namespace aggdiff
