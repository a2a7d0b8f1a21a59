// Command-line front end: simulate, analyze-kernel, check-balance, convergence, presets.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aggdiff/config.hpp"
#include "aggdiff/error.hpp"
#include "aggdiff/runner.hpp"

namespace fs = std::filesystem;
using namespace aggdiff;

namespace {

constexpr int kExitInvalidConfig = 2;

std::string read_text(const std::string& path_or_text) {
  std::error_code ec;
  if (fs::is_regular_file(path_or_text, ec)) {
    std::ifstream in(path_or_text);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  return path_or_text;
}

struct SimulateArgs {
  std::string config;
  std::string preset;
  std::string out;
  std::vector<std::string> overrides;
  std::vector<std::string> sweep;
  std::size_t jobs = 1;
  std::size_t progress = 0;
  bool quiet = false;
};

int cmd_simulate(const SimulateArgs& a) {
  if (!a.sweep.empty()) {
    std::vector<RunConfig> cfgs;
    std::vector<fs::path> dirs;
    const fs::path root = a.out.empty() ? fs::path("sweep") : fs::path(a.out);
    for (const auto& p : a.sweep) {
      cfgs.push_back(file_config(p, a.overrides));
      dirs.push_back(root / cfgs.back().name);
    }
    const auto results = run_sweep(cfgs, dirs, a.jobs);
    int code = 0;
    for (const auto& r : results) {
      std::cout << r.directory.string() << ": " << (r.exit_code == 0 ? "completed" : "aborted") << '\n';
      code = std::max(code, r.exit_code);
    }
    return code;
  }
  if (a.config.empty() == a.preset.empty()) {
    throw ConfigError("", "give exactly one of --config or --preset");
  }
  std::vector<std::string> overrides = a.overrides;
  if (a.progress > 0) overrides.push_back("time.progress_stride=" + std::to_string(a.progress));
  const RunConfig cfg = a.preset.empty() ? file_config(a.config, overrides) : preset_config(a.preset, overrides);
  const fs::path out = a.out.empty() ? cfg.output_directory : fs::path(a.out);
  const RunDirectoryResult r = run_to_directory(cfg, out, a.progress > 0 ? &std::cerr : nullptr);
  if (r.exit_code != 0) {
    std::cerr << "numerical abort at t = " << r.result.final_state.t << ": " << r.result.abort_message
              << "\nstate written to " << r.abort_state->string() << '\n';
    return r.exit_code;
  }
  if (!a.quiet) {
    const RunReport& rep = r.result.report;
    std::cout << "wrote " << out.string() << " (" << rep.steps << " steps, t = " << rep.t_final
              << ", mass drift " << rep.max_relative_mass_drift() << ", " << r.result.seconds << " s)\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aggregation-diffusion equations with bounded kernels"};
  app.set_version_flag("--version", std::string(software_version()));
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run a config or preset and write a run directory");
  simulate->add_option("--config", sim.config, "Config file");
  simulate->add_option("--preset", sim.preset, "Embedded preset name");
  simulate->add_option("--out", sim.out, "Output directory (default: output.directory)");
  simulate->add_option("--set", sim.overrides, "Override a key, e.g. --set time.t_end=10");
  simulate->add_option("--sweep", sim.sweep, "Run several config files independently");
  simulate->add_option("--jobs", sim.jobs, "Worker threads for --sweep")->check(CLI::PositiveNumber);
  simulate->add_option("--progress", sim.progress, "Print progress every N steps to stderr");
  simulate->add_flag("--quiet", sim.quiet, "No summary line");

  std::string kernel_spec;
  std::optional<double> mass_opt;
  std::optional<double> d_opt;
  double dx = 0.01;
  auto* analyze = app.add_subcommand("analyze-kernel", "Kernel norms and hypothesis checks as JSON");
  analyze->add_option("--kernel", kernel_spec, "Inline table, e.g. '{ type = \"tophat\", alpha = 2, R = 1 }'")
      ->required();
  analyze->add_option("--mass", mass_opt, "Mass for the small-mass constant");
  analyze->add_option("--D", d_opt, "Diffusion rate for the small-mass constant");
  analyze->add_option("--dx", dx, "Grid width for sampled quantities");

  std::string matrix;
  auto* balance = app.add_subcommand("check-balance", "Solve pi_i a_ij = pi_j a_ji; exit 1 when infeasible");
  balance->add_option("--matrix", matrix, "JSON or CSV file (or inline JSON)")->required();

  std::string conv_preset;
  std::size_t levels = 3;
  std::vector<std::string> conv_overrides;
  auto* convergence = app.add_subcommand("convergence", "L1 self-convergence table");
  convergence->add_option("--preset", conv_preset, "Preset name")->required();
  convergence->add_option("--levels", levels, "Number of grids (>= 3)");
  convergence->add_option("--set", conv_overrides, "Override a key");

  std::string show;
  auto* presets = app.add_subcommand("presets", "List presets or print one");
  presets->add_option("--show", show, "Print the config text of a preset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitInvalidConfig;
  }

  try {
    if (*simulate) return cmd_simulate(sim);

    if (*analyze) {
      const Kernel k = kernel_from_spec(parse_config_value(kernel_spec));
      std::cout << analyze_kernel_report(k, dx, mass_opt, d_opt).dump(2) << '\n';
      return 0;
    }

    if (*balance) {
      const auto alpha = parse_alpha_matrix(read_text(matrix));
      const BalanceResult r = solve_detailed_balance(alpha);
      std::cout << to_json(r).dump(2) << '\n';
      return r.balanced() ? 0 : 1;
    }

    if (*convergence) {
      if (levels < 3) {
        std::cerr << "error: need >= 3 levels, got " << levels << '\n';
        return kExitInvalidConfig;
      }
      const ConvergenceStudy s = convergence_study(preset_config(conv_preset, conv_overrides), levels);
      std::cout << format_convergence_table(s);
      return 0;
    }

    if (*presets) {
      if (!show.empty()) {
        std::cout << preset_text(show);
      } else {
        for (const auto& n : preset_names()) std::cout << n << '\n';
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return kExitInvalidConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitInvalidConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
