#include "aggdiff/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "aggdiff/error.hpp"

namespace aggdiff {

using nlohmann::json;

// ---------------------------------------------------------------------------
// text parser

namespace {

class Parser {
public:
  explicit Parser(std::string_view text) : text_(text) {}

  json document() {
    json out = json::object();
    std::string section;
    while (true) {
      skip_blank_lines();
      if (at_end()) break;
      if (peek() == '[') {
        ++pos_;
        skip_inline_space();
        section = key();
        skip_inline_space();
        expect(']');
        end_of_line();
        continue;
      }
      const std::string k = key();
      const std::string full = section.empty() ? k : section + "." + k;
      skip_inline_space();
      expect('=');
      skip_inline_space();
      json v = value();
      if (out.contains(full)) throw ConfigError(full, "duplicate key `" + full + "` (line " + line() + ")");
      out[full] = std::move(v);
      end_of_line();
    }
    return out;
  }

  json single_value() {
    skip_space();
    json v = value();
    skip_space();
    if (!at_end()) fail("trailing characters after value");
    return v;
  }

private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }

  std::string line() const {
    return std::to_string(std::count(text_.begin(), text_.begin() + static_cast<std::ptrdiff_t>(pos_), '\n') + 1);
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("", "config parse error at line " + line() + ": " + msg);
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_comment() {
    if (peek() == '#') {
      while (!at_end() && peek() != '\n') ++pos_;
    }
  }

  void skip_inline_space() {
    while (peek() == ' ' || peek() == '\t' || peek() == '\r') ++pos_;
  }

  // Whitespace, newlines and comments (inside arrays and between entries).
  void skip_space() {
    while (!at_end()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos_;
      } else if (c == '#') {
        skip_comment();
      } else {
        break;
      }
    }
  }

  void skip_blank_lines() { skip_space(); }

  void end_of_line() {
    skip_inline_space();
    skip_comment();
    if (!at_end() && peek() != '\n') fail("unexpected characters after value");
  }

  std::string key() {
    const std::size_t start = pos_;
    while (!at_end()) {
      const char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-') {
        ++pos_;
      } else {
        break;
      }
    }
    if (pos_ == start) fail("expected a key");
    return std::string(text_.substr(start, pos_ - start));
  }

  json value() {
    const char c = peek();
    if (c == '"') return string_value();
    if (c == '[') return array_value();
    if (c == '{') return table_value();
    if (text_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return false;
    }
    return number_value();
  }

  json string_value() {
    ++pos_;
    std::string s;
    while (true) {
      if (at_end() || peek() == '\n') fail("unterminated string");
      char c = text_[pos_++];
      if (c == '"') break;
      if (c == '\\') {
        if (at_end()) fail("unterminated escape");
        const char e = text_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(std::string("unknown escape \\") + e);
        }
      }
      s.push_back(c);
    }
    return s;
  }

  json number_value() {
    const std::size_t start = pos_;
    while (!at_end()) {
      const char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.' || c == '_') {
        ++pos_;
      } else {
        break;
      }
    }
    std::string token(text_.substr(start, pos_ - start));
    token.erase(std::remove(token.begin(), token.end(), '_'), token.end());
    if (token.empty()) fail("expected a value");
    if (token == "inf" || token == "+inf") return std::numeric_limits<double>::infinity();
    if (token == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const char* first = token.data();
    if (*first == '+') ++first;
    const auto res = std::from_chars(first, token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size()) fail("invalid value `" + token + "`");
    return v;
  }

  json array_value() {
    ++pos_;
    json arr = json::array();
    skip_space();
    if (peek() == ']') {
      ++pos_;
      return arr;
    }
    while (true) {
      skip_space();
      arr.push_back(value());
      skip_space();
      if (peek() == ',') {
        ++pos_;
        skip_space();
        if (peek() == ']') {
          ++pos_;
          return arr;
        }
        continue;
      }
      expect(']');
      return arr;
    }
  }

  json table_value() {
    ++pos_;
    json obj = json::object();
    skip_space();
    if (peek() == '}') {
      ++pos_;
      return obj;
    }
    while (true) {
      skip_space();
      const std::string k = key();
      skip_space();
      expect('=');
      skip_space();
      if (obj.contains(k)) fail("duplicate key `" + k + "` in inline table");
      obj[k] = value();
      skip_space();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      expect('}');
      return obj;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

json parse_flat_config(std::string_view text) { return Parser(text).document(); }

json parse_config_value(std::string_view text) { return Parser(text).single_value(); }

// ---------------------------------------------------------------------------
// schema

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "domain.L",         "domain.cells_per_unit", "species.n",          "species.D",
      "initial.type",     "initial.ell",           "initial.mass",       "initial.sigma",
      "kernels.base",     "kernels.alpha",         "kernels.matrix",     "scheme.theta",
      "scheme.cfl",       "scheme.u_floor",        "scheme.u_ess",       "time.t_end",
      "time.snapshot_times", "time.diagnostic_stride", "time.dt_max",    "time.dt_min",
      "time.diffusion_number", "time.progress_stride", "output.directory", "output.formats",
      "name",
  };
  return keys;
}

class Reader {
public:
  explicit Reader(const json& flat) : flat_(flat) {
    if (!flat.is_object()) throw ConfigError("", "configuration must be a table of keys");
    for (const auto& [k, v] : flat.items()) {
      if (!known_keys().contains(k)) throw ConfigError(k, "unknown key `" + k + "`");
    }
  }

  bool has(const std::string& key) const { return flat_.contains(key); }

  const json& require(const std::string& key) const {
    if (!has(key)) throw ConfigError(key, "missing required key `" + key + "`");
    return flat_.at(key);
  }

  double number(const std::string& key) const { return as_number(key, require(key)); }

  double number_or(const std::string& key, double fallback) const {
    return has(key) ? as_number(key, flat_.at(key)) : fallback;
  }

  std::size_t count_or(const std::string& key, std::size_t fallback) const {
    if (!has(key)) return fallback;
    const double v = as_number(key, flat_.at(key));
    if (v < 0.0 || v != std::floor(v)) throw ConfigError(key, "`" + key + "` must be a non-negative integer");
    return static_cast<std::size_t>(v);
  }

  std::string string_or(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const json& v = flat_.at(key);
    if (!v.is_string()) throw ConfigError(key, "`" + key + "` must be a string");
    return v.get<std::string>();
  }

  // Scalar broadcasts to n entries; arrays must have exactly n entries.
  template <class T, class Convert>
  std::vector<T> per_species(const std::string& key, std::size_t n, const T& fallback, Convert convert) const {
    if (!has(key)) return std::vector<T>(n, fallback);
    const json& v = flat_.at(key);
    if (!v.is_array()) return std::vector<T>(n, convert(v));
    if (v.size() != n) {
      throw ConfigError(key, "`" + key + "` must have " + std::to_string(n) + " entries (one per species)");
    }
    std::vector<T> out;
    for (const auto& e : v) out.push_back(convert(e));
    return out;
  }

  std::vector<double> numbers_or(const std::string& key, std::vector<double> fallback) const {
    if (!has(key)) return fallback;
    const json& v = flat_.at(key);
    if (!v.is_array()) throw ConfigError(key, "`" + key + "` must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) out.push_back(as_number(key, e));
    return out;
  }

  static double as_number(const std::string& key, const json& v) {
    if (!v.is_number()) throw ConfigError(key, "`" + key + "` must be a number");
    return v.get<double>();
  }

private:
  const json& flat_;
};

void check(bool ok, const std::string& key, const std::string& msg) {
  if (!ok) throw ConfigError(key, "`" + key + "` " + msg);
}

void validate_kernel_spec(const std::string& key, const json& spec) {
  if (!spec.is_object()) throw ConfigError(key, "`" + key + "` must be an inline table { type = ... }");
  if (!spec.contains("type") || !spec["type"].is_string()) {
    throw ConfigError(key, "`" + key + "` needs a string `type` (\"tophat\" or \"sampled\")");
  }
  const std::string type = spec["type"].get<std::string>();
  std::set<std::string> allowed;
  if (type == "tophat") {
    allowed = {"type", "alpha", "R"};
    for (const char* f : {"alpha", "R"}) {
      if (!spec.contains(f) || !spec[f].is_number()) {
        throw ConfigError(key, "`" + key + "` tophat kernel needs numeric `" + f + "`");
      }
    }
    check(spec["R"].get<double>() > 0.0, key, "tophat radius R must be positive");
    check(std::isfinite(spec["alpha"].get<double>()), key, "tophat alpha must be finite");
  } else if (type == "sampled") {
    allowed = {"type", "file"};
    if (!spec.contains("file") || !spec["file"].is_string()) {
      throw ConfigError(key, "`" + key + "` sampled kernel needs a string `file`");
    }
  } else {
    throw ConfigError(key, "`" + key + "` has unknown kernel type \"" + type + "\"");
  }
  for (const auto& [k, v] : spec.items()) {
    if (!allowed.contains(k)) throw ConfigError(key, "`" + key + "` has unknown field `" + k + "`");
  }
}

}  // namespace

RunConfig run_config_from_flat(const json& flat, const std::filesystem::path& base_dir) {
  Reader r(flat);
  RunConfig c;
  c.base_directory = base_dir;
  c.name = r.string_or("name", "run");

  c.half_length = r.number("domain.L");
  check(c.half_length > 0.0 && std::isfinite(c.half_length), "domain.L", "must be positive");
  c.cells_per_unit = r.number_or("domain.cells_per_unit", 100.0);
  check(c.cells_per_unit > 0.0, "domain.cells_per_unit", "must be positive");
  check(std::round(2.0 * c.half_length * c.cells_per_unit) >= 4.0, "domain.cells_per_unit",
        "gives fewer than 4 cells");

  c.n_species = r.count_or("species.n", 1);
  check(c.n_species >= 1, "species.n", "must be at least 1");
  const std::size_t n = c.n_species;
  auto num = [](const std::string& key) {
    return [key](const json& v) { return Reader::as_number(key, v); };
  };
  if (!r.has("species.D")) throw ConfigError("species.D", "missing required key `species.D`");
  c.diffusion = r.per_species<double>("species.D", n, 0.0, num("species.D"));
  for (double d : c.diffusion) check(d > 0.0 && std::isfinite(d), "species.D", "entries must be positive");

  const auto types = r.per_species<std::string>("initial.type", n, "indicator", [](const json& v) {
    if (!v.is_string()) throw ConfigError("initial.type", "`initial.type` entries must be strings");
    return v.get<std::string>();
  });
  const auto ells = r.per_species<double>("initial.ell", n, 4.0, num("initial.ell"));
  const auto masses = r.per_species<double>("initial.mass", n, 1.0, num("initial.mass"));
  const auto sigmas = r.per_species<double>("initial.sigma", n, 0.5, num("initial.sigma"));
  for (std::size_t i = 0; i < n; ++i) {
    InitialSpec s{types[i], ells[i], masses[i], sigmas[i]};
    check(s.type == "indicator" || s.type == "gaussian", "initial.type", "must be \"indicator\" or \"gaussian\"");
    check(s.mass >= 0.0 && std::isfinite(s.mass), "initial.mass", "entries must be non-negative");
    if (s.type == "indicator") {
      check(s.ell > 0.0 && s.ell < c.half_length, "initial.ell", "entries must satisfy 0 < ell < domain.L");
    } else {
      check(s.sigma > 0.0, "initial.sigma", "entries must be positive");
    }
    c.initial.push_back(s);
  }

  const bool has_matrix = r.has("kernels.matrix");
  const bool has_base = r.has("kernels.base");
  if (has_matrix && (has_base || r.has("kernels.alpha"))) {
    throw ConfigError("kernels.matrix", "`kernels.matrix` cannot be combined with `kernels.base`/`kernels.alpha`");
  }
  if (has_matrix) {
    const json& m = flat.at("kernels.matrix");
    check(m.is_array() && m.size() == n, "kernels.matrix", "must be an n x n array of kernel tables");
    for (std::size_t i = 0; i < n; ++i) {
      check(m[i].is_array() && m[i].size() == n, "kernels.matrix", "must be an n x n array of kernel tables");
      for (std::size_t j = 0; j < n; ++j) validate_kernel_spec("kernels.matrix", m[i][j]);
    }
    c.kernel_matrix = m;
  } else {
    c.kernel_base = r.require("kernels.base");
    validate_kernel_spec("kernels.base", c.kernel_base);
    if (r.has("kernels.alpha")) {
      const json& a = flat.at("kernels.alpha");
      check(a.is_array() && a.size() == n, "kernels.alpha", "must be an n x n array of numbers");
      for (const auto& row : a) {
        check(row.is_array() && row.size() == n, "kernels.alpha", "must be an n x n array of numbers");
        std::vector<double> vals;
        for (const auto& e : row) {
          vals.push_back(Reader::as_number("kernels.alpha", e));
          check(std::isfinite(vals.back()), "kernels.alpha", "entries must be finite");
        }
        c.alpha.push_back(vals);
      }
    } else {
      check(n == 1, "kernels.alpha", "is required when species.n > 1");
      c.alpha = {{1.0}};
    }
  }

  c.theta = r.number_or("scheme.theta", 2.0);
  check(c.theta >= 1.0 && c.theta <= 2.0, "scheme.theta", "must lie in [1, 2]");
  c.cfl = r.number_or("scheme.cfl", 0.25);
  check(c.cfl > 0.0 && c.cfl <= 1.0, "scheme.cfl", "must lie in (0, 1]");
  if (r.has("scheme.u_floor")) {
    c.u_floor = r.number("scheme.u_floor");
    check(*c.u_floor > 0.0 && *c.u_floor <= 1e-6, "scheme.u_floor", "must lie in (0, 1e-6]");
  }
  c.u_ess = r.number_or("scheme.u_ess", 1e-4);
  check(c.u_ess > 0.0, "scheme.u_ess", "must be positive");

  c.t_end = r.number("time.t_end");
  check(c.t_end >= 0.0 && std::isfinite(c.t_end), "time.t_end", "must be non-negative");
  std::vector<double> defaults;
  for (double t : {0.0, 1.0, 2.7, 10.0, 100.0, 200.0}) {
    if (t <= c.t_end) defaults.push_back(t);
  }
  if (defaults.empty() || defaults.back() != c.t_end) defaults.push_back(c.t_end);
  c.snapshot_times = r.numbers_or("time.snapshot_times", defaults);
  check(std::is_sorted(c.snapshot_times.begin(), c.snapshot_times.end()), "time.snapshot_times",
        "must be sorted");
  for (double t : c.snapshot_times) check(t >= 0.0 && t <= c.t_end, "time.snapshot_times", "must lie in [0, t_end]");
  c.diagnostic_stride = r.count_or("time.diagnostic_stride", 100);
  check(c.diagnostic_stride > 0, "time.diagnostic_stride", "must be positive");
  if (r.has("time.dt_max")) {
    c.dt_max = r.number("time.dt_max");
    check(*c.dt_max > 0.0, "time.dt_max", "must be positive");
  }
  c.dt_min = r.number_or("time.dt_min", 1e-12);
  check(c.dt_min > 0.0, "time.dt_min", "must be positive");
  c.diffusion_number = r.number_or("time.diffusion_number", 0.4);
  check(c.diffusion_number > 0.0, "time.diffusion_number", "must be positive");
  c.progress_stride = r.count_or("time.progress_stride", 0);

  c.output_directory = r.string_or("output.directory", "run");
  if (r.has("output.formats")) {
    const json& f = flat.at("output.formats");
    check(f.is_array(), "output.formats", "must be an array of strings");
    c.formats.clear();
    for (const auto& e : f) {
      check(e.is_string() && e.get<std::string>() == "csv", "output.formats", "supports only \"csv\"");
      c.formats.push_back(e.get<std::string>());
    }
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  json flat = parse_flat_config(ss.str());
  if (!flat.contains("name")) flat["name"] = path.stem().string();
  return run_config_from_flat(flat, path.parent_path().empty() ? "." : path.parent_path());
}

json to_json(const RunConfig& c) {
  json j;
  j["name"] = c.name;
  j["domain"] = {{"L", c.half_length}, {"cells_per_unit", c.cells_per_unit}};
  j["species"] = {{"n", c.n_species}, {"D", c.diffusion}};
  json init = json::array();
  for (const auto& s : c.initial) {
    json e = {{"type", s.type}, {"mass", s.mass}};
    if (s.type == "indicator") {
      e["ell"] = s.ell;
    } else {
      e["sigma"] = s.sigma;
    }
    init.push_back(e);
  }
  j["initial"] = init;
  if (!c.kernel_matrix.is_null()) {
    j["kernels"] = {{"matrix", c.kernel_matrix}};
  } else {
    j["kernels"] = {{"base", c.kernel_base}, {"alpha", c.alpha}};
  }
  j["scheme"] = {{"theta", c.theta}, {"cfl", c.cfl}, {"u_ess", c.u_ess}};
  j["scheme"]["u_floor"] = c.u_floor ? json(*c.u_floor) : json(nullptr);
  j["time"] = {{"t_end", c.t_end},
               {"snapshot_times", c.snapshot_times},
               {"diagnostic_stride", c.diagnostic_stride},
               {"dt_min", c.dt_min},
               {"diffusion_number", c.diffusion_number},
               {"progress_stride", c.progress_stride}};
  j["time"]["dt_max"] = c.dt_max ? json(*c.dt_max) : json(nullptr);
  j["output"] = {{"directory", c.output_directory.string()}, {"formats", c.formats}};
  return j;
}

Kernel load_sampled_kernel(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("kernels", "cannot read sampled kernel file " + path.string());
  std::vector<double> xs;
  std::vector<double> vs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double x = 0.0;
    double v = 0.0;
    if (!(row >> x >> v)) {
      if (xs.empty() && lineno == 1) continue;  // header
      throw ConfigError("kernels", path.string() + ": malformed row " + std::to_string(lineno));
    }
    xs.push_back(x);
    vs.push_back(v);
  }
  if (xs.size() < 2) throw ConfigError("kernels", path.string() + ": need at least two samples");
  const double dx = xs[1] - xs[0];
  if (!(dx > 0.0)) throw ConfigError("kernels", path.string() + ": x must increase");
  for (std::size_t k = 1; k < xs.size(); ++k) {
    if (std::abs((xs[k] - xs[k - 1]) - dx) > 1e-9 * std::max(1.0, std::abs(dx))) {
      throw ConfigError("kernels", path.string() + ": x must be uniformly spaced");
    }
  }
  return Kernel::sampled(std::move(vs), dx, xs.front() - 0.5 * dx);
}

Kernel kernel_from_spec(const json& spec, const std::filesystem::path& base_dir) {
  validate_kernel_spec("kernel", spec);
  const std::string type = spec["type"].get<std::string>();
  if (type == "tophat") return Kernel::tophat(spec["alpha"].get<double>(), spec["R"].get<double>());
  std::filesystem::path file = spec["file"].get<std::string>();
  if (file.is_relative()) file = base_dir / file;
  return load_sampled_kernel(file);
}

Grid1D build_grid(const RunConfig& c) { return Grid1D::with_resolution(c.half_length, c.cells_per_unit); }

KernelMatrix build_kernels(const RunConfig& c) {
  if (!c.kernel_matrix.is_null()) {
    std::vector<Kernel> entries;
    for (const auto& row : c.kernel_matrix) {
      for (const auto& spec : row) entries.push_back(kernel_from_spec(spec, c.base_directory));
    }
    return KernelMatrix(c.n_species, std::move(entries));
  }
  return KernelMatrix::scaled(kernel_from_spec(c.kernel_base, c.base_directory), c.alpha);
}

SystemState build_state(const RunConfig& c) {
  const Grid1D grid = build_grid(c);
  std::vector<CellField> fields;
  double total = 0.0;
  for (const auto& s : c.initial) {
    fields.push_back(s.type == "indicator" ? indicator_initial_data(grid, s.ell, s.mass)
                                           : gaussian_initial_data(grid, s.sigma, s.mass));
    total += mass(fields.back());
  }
  SchemeParams params;
  params.diffusion = c.diffusion;
  params.theta = c.theta;
  params.u_floor = c.u_floor.value_or(default_u_floor(total, grid));
  return make_state(std::move(fields), std::move(params), build_kernels(c));
}

TimeControls build_controls(const RunConfig& c, const SystemState& state) {
  TimeControls tc;
  tc.t_end = c.t_end;
  tc.cfl = c.cfl;
  const double diffusive = diffusive_dt_limit(state.params, state.grid(), c.diffusion_number);
  tc.dt_max = c.dt_max ? std::min(*c.dt_max, diffusive) : diffusive;
  tc.dt_min = std::min(c.dt_min, 0.5 * tc.dt_max);
  tc.snapshot_times = c.snapshot_times;
  tc.diagnostic_stride = c.diagnostic_stride;
  tc.progress_stride = c.progress_stride;
  return tc;
}

}  // namespace aggdiff
