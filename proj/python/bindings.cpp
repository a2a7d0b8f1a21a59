#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <vector>

#include "aggdiff/error.hpp"
#include "aggdiff/kernel.hpp"
#include "aggdiff/runner.hpp"

namespace py = pybind11;
using namespace aggdiff;

namespace {

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

std::vector<std::vector<double>> values_of(const std::vector<CellField>& fields) {
  std::vector<std::vector<double>> out;
  for (const auto& f : fields) out.emplace_back(f.values().begin(), f.values().end());
  return out;
}

RunConfig config_of(const std::string& preset, const std::optional<std::string>& config_file,
                    const std::vector<std::string>& overrides) {
  if (config_file) return file_config(*config_file, overrides);
  return preset_config(preset, overrides);
}

py::dict simulate_py(const std::string& preset, const std::vector<std::string>& overrides,
                     const std::optional<std::string>& config_file) {
  SimulationResult r;
  {
    const RunConfig cfg = config_of(preset, config_file, overrides);
    py::gil_scoped_release release;
    r = simulate(cfg);
  }
  py::list snaps;
  for (const auto& s : r.snapshots) {
    py::dict d;
    d["t"] = s.t;
    d["u"] = values_of(s.fields);
    d["xi"] = values_of(s.potentials);
    snaps.append(d);
  }
  py::dict out;
  out["x"] = r.final_state.grid().centers();
  out["snapshots"] = snaps;
  out["report"] = to_python(to_json(r.report));
  out["hypotheses"] = to_python(to_json(r.hypotheses));
  out["aborted"] = r.aborted;
  out["abort_message"] = r.abort_message;
  out["seconds"] = r.seconds;
  return out;
}

py::dict run_py(const std::string& preset, const std::string& out_dir, const std::vector<std::string>& overrides,
                const std::optional<std::string>& config_file) {
  RunDirectoryResult r;
  {
    const RunConfig cfg = config_of(preset, config_file, overrides);
    py::gil_scoped_release release;
    r = run_to_directory(cfg, out_dir);
  }
  py::dict out;
  out["exit_code"] = r.exit_code;
  out["directory"] = r.directory.string();
  out["abort_state"] = r.abort_state ? py::object(py::str(r.abort_state->string())) : py::object(py::none());
  return out;
}

}  // namespace

PYBIND11_MODULE(_aggdiff, m) {
  m.doc() = "Finite-volume solver for aggregation-diffusion equations with bounded kernels";
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.attr("__version__") = std::string(software_version());
  m.def("presets", &preset_names, "Names of the built-in presets.");
  m.def("preset_text", [](const std::string& name) { return std::string(preset_text(name)); }, py::arg("name"),
        "TOML text of a preset.");
  m.def(
      "analyze_kernel",
      [](double alpha, double radius, double dx, std::optional<double> mass, std::optional<double> diffusion) {
        return to_python(analyze_kernel_report(Kernel::tophat(alpha, radius), dx, mass, diffusion));
      },
      py::arg("alpha"), py::arg("R"), py::arg("dx") = 0.01, py::arg("mass") = py::none(), py::arg("D") = py::none(),
      "Norms, symmetry and hypothesis flags of a top-hat kernel.");
  m.def(
      "detailed_balance",
      [](const std::vector<std::vector<double>>& alpha) { return to_python(to_json(solve_detailed_balance(alpha))); },
      py::arg("alpha"), "Weights pi with pi_i a_ij = pi_j a_ji, or a 1-based witness.");
  m.def("simulate", &simulate_py, py::arg("preset") = "", py::arg("overrides") = std::vector<std::string>{},
        py::arg("config_file") = py::none(), "Runs a preset or config file in memory.");
  m.def("run", &run_py, py::arg("preset"), py::arg("out_dir"), py::arg("overrides") = std::vector<std::string>{},
        py::arg("config_file") = py::none(), "Runs and writes snapshots, diagnostics and report.json.");
}
