#include "aggdiff/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "aggdiff/error.hpp"
#include "aggdiff/format.hpp"

#ifndef AGGDIFF_VERSION
#define AGGDIFF_VERSION "0.0.0"
#endif

namespace aggdiff {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view software_version() { return AGGDIFF_VERSION; }

// ---------------------------------------------------------------------------
// presets

namespace {

struct Preset {
  const char* name;
  const char* text;
};

constexpr Preset kPresets[] = {
    {"fig-scalar1", R"(# weak self-attraction: decays to the constant state
[domain]
L = 12
cells_per_unit = 100
[species]
D = 0.25
[initial]
type = "indicator"
ell = 4
mass = 1
[kernels]
base = { type = "tophat", alpha = 2.0, R = 1.0 }
[time]
t_end = 200
)"},
    {"fig-scalar2", R"(# strong self-attraction: one concentrated region about x = 0
[domain]
L = 6
cells_per_unit = 100
[species]
D = 0.25
[initial]
type = "indicator"
ell = 4
mass = 1
[kernels]
base = { type = "tophat", alpha = 30.0, R = 1.0 }
[time]
t_end = 100
)"},
    {"fig-scalar3", R"(# intermediate self-attraction: two peaks
[domain]
L = 12
cells_per_unit = 100
[species]
D = 0.25
[initial]
type = "indicator"
ell = 4
mass = 1
[kernels]
base = { type = "tophat", alpha = 20.0, R = 1.0 }
[time]
t_end = 200
)"},
    {"fig-scalar4", R"(# strong self-repulsion: transient pattern, slow decay
[domain]
L = 16
cells_per_unit = 100
[species]
D = 0.25
[initial]
type = "indicator"
ell = 4
mass = 1
[kernels]
base = { type = "tophat", alpha = -20.0, R = 1.0 }
[time]
t_end = 200
snapshot_times = [0, 1, 2.7, 5, 10, 15, 20, 100, 200]
)"},
    {"fig-system1", R"(# two species, symmetric repulsive cross-interaction
[domain]
L = 10
cells_per_unit = 100
[species]
n = 2
D = [0.25, 0.25]
[initial]
type = "indicator"
ell = 4
mass = 1
[kernels]
base = { type = "tophat", alpha = 1.0, R = 1.0 }
alpha = [[20, -10],
         [-10, 2]]
[time]
t_end = 100
)"},
    {"fig-system2", R"(# two species without detailed balance
[domain]
L = 10
cells_per_unit = 100
[species]
n = 2
D = [0.25, 0.25]
[initial]
type = "indicator"
ell = 4
mass = 1
[kernels]
base = { type = "tophat", alpha = 1.0, R = 1.0 }
alpha = [[20, -10],
         [5, 20]]
[time]
t_end = 100
)"},
    {"small-mass", R"(# small-mass regime: c = D - alpha/(2R) = 0.05 > 0
[domain]
L = 12
cells_per_unit = 100
[species]
D = 0.25
[initial]
type = "indicator"
ell = 4
mass = 1
[kernels]
base = { type = "tophat", alpha = 0.4, R = 1.0 }
[time]
t_end = 50
)"},
    {"heat-smooth", R"(# smooth heat test for self-convergence
[domain]
L = 4
cells_per_unit = 20
[species]
D = 0.25
[initial]
type = "gaussian"
sigma = 0.5
mass = 1
[kernels]
base = { type = "tophat", alpha = 0.0, R = 1.0 }
[time]
t_end = 0.5
diagnostic_stride = 10
)"},
    {"aggregation-smooth", R"(# smooth data with weak attraction for self-convergence
[domain]
L = 4
cells_per_unit = 20
[species]
D = 0.25
[initial]
type = "gaussian"
sigma = 0.5
mass = 1
[kernels]
base = { type = "tophat", alpha = 0.4, R = 1.0 }
[time]
t_end = 0.5
diagnostic_stride = 10
)"},
    {"heat-indicator", R"(# nonsmooth heat test; first order near the jumps
[domain]
L = 4
cells_per_unit = 20
[species]
D = 0.25
[initial]
type = "indicator"
ell = 1
mass = 1
[kernels]
base = { type = "tophat", alpha = 0.0, R = 1.0 }
[time]
t_end = 0.05
diagnostic_stride = 10
)"},
};

json flat_with_overrides(std::string_view text, const std::vector<std::string>& overrides) {
  json flat = parse_flat_config(text);
  for (const auto& o : overrides) apply_override(flat, o);
  return flat;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& p : kPresets) out.emplace_back(p.name);
  return out;
}

std::string_view preset_text(std::string_view name) {
  for (const auto& p : kPresets) {
    if (name == p.name) return p.text;
  }
  std::string known;
  for (const auto& p : kPresets) known += std::string(known.empty() ? "" : ", ") + p.name;
  throw ConfigError("preset", "unknown preset `" + std::string(name) + "` (known: " + known + ")");
}

void apply_override(json& flat, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("", "override `" + std::string(assignment) + "` must look like key=value");
  }
  std::string key(assignment.substr(0, eq));
  key.erase(key.find_last_not_of(" \t") + 1);
  key.erase(0, key.find_first_not_of(" \t"));
  flat[key] = parse_config_value(assignment.substr(eq + 1));
}

RunConfig preset_config(std::string_view name, const std::vector<std::string>& overrides) {
  json flat = flat_with_overrides(preset_text(name), overrides);
  if (!flat.contains("name")) flat["name"] = std::string(name);
  return run_config_from_flat(flat);
}

RunConfig file_config(const fs::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  json flat = flat_with_overrides(ss.str(), overrides);
  if (!flat.contains("name")) flat["name"] = path.stem().string();
  return run_config_from_flat(flat, path.parent_path().empty() ? "." : path.parent_path());
}

// ---------------------------------------------------------------------------
// JSON views

json to_json(const KernelAnalysis& a) {
  return {{"linf_norm", a.linf_norm},
          {"l1_norm", a.l1_norm},
          {"tv_norm", a.tv_norm},
          {"symmetric", a.symmetric},
          {"compact_support", a.compact_support},
          {"support_radius", a.support_radius},
          {"h4_norm", a.h4_norm},
          {"h4_fourier_integral", a.h4_fourier_integral},
          {"h4_fourier_refined", a.h4_fourier_refined},
          {"h4_fourier_stable", a.h4_fourier_stable},
          {"dx", a.dx}};
}

json to_json(const BalanceResult& b) {
  json j = {{"balanced", b.balanced()}};
  if (b.balanced()) {
    j["pi"] = *b.weights;
  } else {
    std::vector<std::size_t> w;
    for (std::size_t s : b.witness) w.push_back(s + 1);
    j["witness"] = w;
    j["reason"] = b.reason;
  }
  return j;
}

json to_json(const HypothesisReport& h) {
  json entries = json::array();
  for (std::size_t i = 0; i < h.n; ++i) {
    for (std::size_t k = 0; k < h.n; ++k) {
      json e = to_json(h.entry(i, k));
      e["i"] = i + 1;
      e["j"] = k + 1;
      entries.push_back(e);
    }
  }
  return {{"n", h.n},
          {"h1", h.h1},
          {"h2", h.h2},
          {"h3", h.h3},
          {"h4", h.h4},
          {"h5", h.n == 1 || h.detailed_balance.balanced()},
          {"h6", h.h6},
          {"entries", entries},
          {"detailed_balance", to_json(h.detailed_balance)},
          {"small_mass_constants", h.small_mass_constants},
          {"theorems",
           {{"small_mass_existence", h.theorems.small_mass_existence},
            {"arbitrary_mass_existence", h.theorems.arbitrary_mass_existence},
            {"strong_uniqueness", h.theorems.strong_uniqueness},
            {"classical_regularity", h.theorems.classical_regularity}}}};
}

json to_json(const RunReport& r) {
  return {{"steps", r.steps},
          {"t_final", r.t_final},
          {"min_dt", r.min_dt},
          {"max_dt", r.max_dt},
          {"initial_mass", r.initial_mass},
          {"final_mass", r.final_mass},
          {"clipped_mass", r.clipped_mass},
          {"most_negative_ratio", r.most_negative_ratio},
          {"max_relative_mass_drift", r.max_relative_mass_drift()}};
}

// ---------------------------------------------------------------------------
// simulation

Snapshot make_snapshot(const SystemState& state) {
  Snapshot s;
  s.t = state.t;
  s.fields = state.fields;
  for (std::size_t i = 0; i < state.n_species(); ++i) s.potentials.push_back(potential(state, i));
  return s;
}

SimulationResult simulate(const RunConfig& cfg, std::ostream* progress) {
  const auto start = std::chrono::steady_clock::now();
  SimulationResult res;
  res.config = cfg;
  SystemState state = build_state(cfg);
  const TimeControls controls = build_controls(cfg, state);

  std::vector<double> masses;
  for (const auto& f : state.fields) masses.push_back(mass(f));
  res.hypotheses = assess(state.kernels(), state.params.diffusion, masses, state.grid().dx());
  res.weights = energy_weights(state.kernels());

  RunSinks sinks;
  sinks.on_snapshot = [&](const SystemState& s) { res.snapshots.push_back(make_snapshot(s)); };
  sinks.on_diagnostic = [&](const SystemState& s, double dt) {
    res.diagnostics.push_back(make_record(s, dt, res.weights, cfg.u_ess));
  };
  sinks.progress = progress;
  try {
    res.report = run(state, controls, sinks);
  } catch (const NumericalError& e) {
    res.aborted = true;
    res.abort_message = e.what();
    res.report.t_final = state.t;
  }
  res.final_state = std::move(state);
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

void write_fields_csv(const fs::path& path, const std::vector<CellField>& fields, std::string_view prefix) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "x";
  for (std::size_t i = 1; i <= fields.size(); ++i) out << ',' << prefix << i;
  out << '\n';
  const Grid1D& g = fields.front().grid();
  for (std::size_t j = 0; j < g.size(); ++j) {
    out << format_real(g.center(j));
    for (const auto& f : fields) out << ',' << format_real(f[j]);
    out << '\n';
  }
}

RunDirectoryResult run_to_directory(const RunConfig& cfg, const fs::path& out_dir, std::ostream* progress) {
  RunDirectoryResult out;
  out.directory = out_dir;
  fs::create_directories(out_dir / "snapshots");
  out.result = simulate(cfg, progress);
  const SimulationResult& res = out.result;

  json snaps = json::array();
  for (const auto& s : res.snapshots) {
    const std::string tag = format_short(s.t);
    const std::string u_file = "snapshots/t_" + tag + ".csv";
    const std::string xi_file = "snapshots/xi_" + tag + ".csv";
    write_fields_csv(out_dir / u_file, s.fields, "u");
    write_fields_csv(out_dir / xi_file, s.potentials, "xi");
    snaps.push_back({{"t", s.t}, {"file", u_file}, {"xi_file", xi_file}});
  }

  {
    std::ofstream diag(out_dir / "diagnostics.csv");
    diag << diagnostics_csv_header(cfg.n_species) << '\n';
    for (const auto& r : res.diagnostics) diag << diagnostics_csv_row(r) << '\n';
  }

  json report;
  report["software"] = {{"name", "aggdiff"}, {"version", std::string(software_version())}};
  report["config"] = to_json(cfg);
  report["status"] = res.aborted ? "aborted" : "completed";
  report["run_report"] = to_json(res.report);
  report["hypotheses"] = to_json(res.hypotheses);
  report["small_mass_constants"] = res.hypotheses.small_mass_constants;
  report["theorems"] = report["hypotheses"]["theorems"];
  report["energy_weights"] = {{"pi", res.weights.pi}, {"balanced", res.weights.balanced}};
  report["u_ess"] = cfg.u_ess;
  report["u_floor"] = res.final_state.params.u_floor;
  report["snapshots"] = snaps;
  report["diagnostics_file"] = "diagnostics.csv";
  report["wall_seconds"] = res.seconds;

  if (res.aborted) {
    const fs::path dump = out_dir / "abort_state.csv";
    write_fields_csv(dump, res.final_state.fields, "u");
    out.abort_state = dump;
    out.exit_code = 3;
    report["abort"] = {{"t", res.final_state.t}, {"message", res.abort_message}, {"state_file", "abort_state.csv"}};
  }

  std::ofstream rep(out_dir / "report.json");
  rep << report.dump(2) << '\n';
  return out;
}

std::vector<RunDirectoryResult> run_sweep(const std::vector<RunConfig>& cfgs, const std::vector<fs::path>& out_dirs,
                                          std::size_t jobs) {
  if (cfgs.size() != out_dirs.size()) throw InvalidParameter("run_sweep: one output directory per config");
  std::vector<RunDirectoryResult> results(cfgs.size());
  std::vector<std::string> errors(cfgs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < cfgs.size(); k = next++) {
      try {
        results[k] = run_to_directory(cfgs[k], out_dirs[k]);
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(cfgs.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (std::size_t k = 0; k < cfgs.size(); ++k) {
    if (!errors[k].empty()) throw std::runtime_error(cfgs[k].name + ": " + errors[k]);
  }
  return results;
}

// ---------------------------------------------------------------------------
// analysis commands

json analyze_kernel_report(const Kernel& k, double dx, std::optional<double> m, std::optional<double> d) {
  if (!(dx > 0.0)) throw InvalidParameter("analyze-kernel: dx must be positive");
  json j = to_json(analyze(k, dx));
  if (m && d) {
    const KernelMatrix km(1, {k});
    const HypothesisReport h = assess(km, {*d}, {*m}, dx);
    const double c = h.small_mass_constants.front();
    j["mass"] = *m;
    j["D"] = *d;
    j["c"] = c;
    j["small_mass"] = c > 0.0;
    j["hypotheses"] = {{"h1", h.h1}, {"h2", h.h2}, {"h3", h.h3}, {"h4", h.h4}, {"h6", h.h6}};
    j["theorems"] = to_json(h)["theorems"];
  }
  return j;
}

std::vector<std::vector<double>> parse_alpha_matrix(std::string_view text) {
  std::vector<std::vector<double>> m;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '[') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError("matrix", std::string("matrix JSON: ") + e.what());
    }
    if (!j.is_array()) throw ConfigError("matrix", "matrix must be an array of rows");
    for (const auto& row : j) {
      if (!row.is_array()) throw ConfigError("matrix", "matrix must be an array of rows");
      std::vector<double> r;
      for (const auto& v : row) {
        if (!v.is_number()) throw ConfigError("matrix", "matrix entries must be numbers");
        r.push_back(v.get<double>());
      }
      m.push_back(r);
    }
  } else {
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream row(line);
      std::vector<double> r;
      std::string tok;
      while (row >> tok) {
        double v = 0.0;
        try {
          std::size_t used = 0;
          v = std::stod(tok, &used);
          if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
          throw ConfigError("matrix", "matrix CSV: bad entry `" + tok + "`");
        }
        r.push_back(v);
      }
      m.push_back(r);
    }
  }
  if (m.empty()) throw ConfigError("matrix", "matrix is empty");
  for (const auto& r : m) {
    if (r.size() != m.size()) throw ConfigError("matrix", "matrix must be square");
  }
  return m;
}

// ---------------------------------------------------------------------------
// convergence

std::vector<double> ConvergenceStudy::orders() const {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (r.order) out.push_back(*r.order);
  }
  return out;
}

namespace {

double l1_restricted_difference(const std::vector<CellField>& coarse, const std::vector<CellField>& fine) {
  double total = 0.0;
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    const CellField& c = coarse[i];
    const CellField& f = fine[i];
    if (f.size() != 2 * c.size()) throw InvalidParameter("convergence: fine grid must have twice the cells");
    double s = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) s += std::abs(0.5 * (f[2 * j] + f[2 * j + 1]) - c[j]);
    total += s * c.grid().dx();
  }
  return total;
}

}  // namespace

ConvergenceStudy convergence_study(const RunConfig& base, std::size_t levels) {
  if (levels < 3) throw InvalidParameter("convergence: need >= 3 levels, got " + std::to_string(levels));
  ConvergenceStudy study;
  study.name = base.name;
  study.t_end = base.t_end;
  std::vector<std::vector<CellField>> finals;
  for (std::size_t k = 0; k < levels; ++k) {
    RunConfig cfg = base;
    cfg.cells_per_unit = base.cells_per_unit * std::pow(2.0, static_cast<double>(k));
    cfg.snapshot_times.clear();
    const SimulationResult r = simulate(cfg);
    if (r.aborted) throw NumericalError("convergence: level " + std::to_string(k) + " aborted: " + r.abort_message);
    finals.push_back(r.final_state.fields);
    study.rows.push_back({cfg.cells_per_unit, r.final_state.grid().dx(), std::nullopt, std::nullopt});
  }
  for (std::size_t k = 0; k + 1 < levels; ++k) {
    study.rows[k].l1_difference = l1_restricted_difference(finals[k], finals[k + 1]);
    if (k > 0) study.rows[k].order = std::log2(*study.rows[k - 1].l1_difference / *study.rows[k].l1_difference);
  }
  return study;
}

std::string format_convergence_table(const ConvergenceStudy& study) {
  std::ostringstream out;
  out << "# " << study.name << ", t = " << format_short(study.t_end) << '\n';
  char line[128];
  std::snprintf(line, sizeof line, "%14s %14s %14s %8s\n", "cells_per_unit", "dx", "l1_difference", "order");
  out << line;
  for (const auto& r : study.rows) {
    std::string o = "-";
    if (r.order) {
      std::snprintf(line, sizeof line, "%.4f", *r.order);
      o = line;
    }
    std::snprintf(line, sizeof line, "%14g %14g %14.6e %8s\n", r.cells_per_unit, r.dx,
                  r.l1_difference ? *r.l1_difference : std::nan(""), o.c_str());
    out << line;
  }
  return out.str();
}

}  // namespace aggdiff
