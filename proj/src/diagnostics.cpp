#include "aggdiff/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "aggdiff/error.hpp"
#include "aggdiff/format.hpp"

namespace aggdiff {

double entropy(const CellField& f) {
  double s = 0.0;
  const auto v = f.values();
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (v[j] < 0.0) throw InvalidParameter("entropy: negative density at cell " + std::to_string(j));
    if (v[j] > 0.0) s += v[j] * std::log(v[j]);
  }
  return s * f.grid().dx();
}

double second_moment(const CellField& f) {
  const Grid1D& g = f.grid();
  double s = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double x = g.center(j);
    s += f[j] * x * x;
  }
  return s * g.dx();
}

double support_measure(const CellField& f, double threshold) {
  std::size_t count = 0;
  for (double v : f.values()) count += v > threshold ? 1 : 0;
  return static_cast<double>(count) * f.grid().dx();
}

EnergyWeights energy_weights(const KernelMatrix& kernels) {
  const BalanceResult bal = solve_detailed_balance(kernels);
  if (bal.balanced()) return {*bal.weights, true};
  return {std::vector<double>(kernels.size(), 1.0), false};
}

namespace {

double interaction_from(const SystemState& state, const std::vector<std::vector<double>>& nonlocal,
                        const std::vector<double>& pi) {
  double total = 0.0;
  for (std::size_t i = 0; i < state.n_species(); ++i) {
    const auto u = state.fields[i].values();
    double s = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) s += u[j] * nonlocal[i][j];
    total += pi[i] * s;
  }
  return 0.5 * total * state.grid().dx();
}

PotentialStats stats_from(const SystemState& state, std::size_t i, const std::vector<double>& nonlocal,
                          double u_ess) {
  const double d = state.params.diffusion[i];
  const double floor = state.params.u_floor;
  const auto u = state.fields[i].values();
  PotentialStats st;
  double sum = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (u[j] <= u_ess) continue;
    sum += d * std::log(std::max(u[j], floor)) + nonlocal[j];
    ++st.cells;
  }
  if (st.cells == 0) {
    st.stddev = std::numeric_limits<double>::infinity();
    return st;
  }
  st.mean = sum / static_cast<double>(st.cells);
  double var = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (u[j] <= u_ess) continue;
    const double dev = d * std::log(std::max(u[j], floor)) + nonlocal[j] - st.mean;
    var += dev * dev;
  }
  st.stddev = std::sqrt(var / static_cast<double>(st.cells));
  return st;
}

void check_weights(const SystemState& state, const std::vector<double>& pi) {
  if (pi.size() != state.n_species()) throw InvalidParameter("energy: weight count differs from species count");
}

}  // namespace

double interaction_energy(const SystemState& state, const std::vector<double>& pi) {
  check_weights(state, pi);
  std::vector<std::vector<double>> nonlocal;
  state.interaction->apply(state.fields, nonlocal);
  return interaction_from(state, nonlocal, pi);
}

double free_energy(const SystemState& state, const std::vector<double>& pi) {
  check_weights(state, pi);
  double h = 0.0;
  for (std::size_t i = 0; i < state.n_species(); ++i) {
    h += state.params.diffusion[i] * pi[i] * entropy(state.fields[i]);
  }
  return h + interaction_energy(state, pi);
}

PotentialStats potential_stats(const SystemState& state, std::size_t species, double u_ess) {
  std::vector<std::vector<double>> nonlocal;
  state.interaction->apply(state.fields, nonlocal);
  return stats_from(state, species, nonlocal[species], u_ess);
}

double steadiness(const SystemState& state, std::size_t species, double u_ess) {
  return potential_stats(state, species, u_ess).stddev;
}

std::size_t count_local_maxima(const CellField& f, double threshold, double min_prominence) {
  const auto v = f.values();
  const std::size_t n = v.size();
  // Prominence: height above the higher of the lowest points reached walking
  // each way until a higher cell or the wall. Equal tops: the leftmost keeps it.
  const auto prominence = [&](std::size_t first, std::size_t last) {
    const double h = v[first];
    const double inf = std::numeric_limits<double>::infinity();
    double left = inf;
    for (std::size_t k = first; k-- > 0 && v[k] < h;) left = std::min(left, v[k]);
    double right = inf;
    for (std::size_t k = last + 1; k < n && v[k] <= h; ++k) right = std::min(right, v[k]);
    // A side with no cells (wall) does not bound the peak.
    if (first == 0) left = -inf;
    if (last + 1 == n) right = -inf;
    return h - std::max(left, right);
  };
  std::size_t count = 0;
  std::size_t j = 0;
  while (j < n) {
    // Treat a run of equal values as one plateau.
    std::size_t end = j;
    while (end + 1 < n && v[end + 1] == v[j]) ++end;
    const bool left_ok = j == 0 || v[j - 1] < v[j];
    const bool right_ok = end + 1 == n || v[end + 1] < v[j];
    if (left_ok && right_ok && v[j] > threshold && n > 1 &&
        (min_prominence <= 0.0 || prominence(j, end) >= min_prominence)) {
      ++count;
    }
    j = end + 1;
  }
  return count;
}

DiagnosticsRecord make_record(const SystemState& state, double dt, const EnergyWeights& weights,
                              double u_ess) {
  check_weights(state, weights.pi);
  DiagnosticsRecord r;
  r.t = state.t;
  r.dt = dt;
  r.balanced = weights.balanced;
  std::vector<std::vector<double>> nonlocal;
  state.interaction->apply(state.fields, nonlocal);
  double h_weighted = 0.0;
  for (std::size_t i = 0; i < state.n_species(); ++i) {
    const CellField& u = state.fields[i];
    r.mass.push_back(mass(u));
    r.entropy.push_back(entropy(u));
    r.second_moment.push_back(second_moment(u));
    r.max_value.push_back(*std::max_element(u.values().begin(), u.values().end()));
    r.support_measure.push_back(support_measure(u, u_ess));
    r.steadiness.push_back(stats_from(state, i, nonlocal[i], u_ess).stddev);
    h_weighted += state.params.diffusion[i] * weights.pi[i] * r.entropy.back();
  }
  r.interaction_energy = interaction_from(state, nonlocal, weights.pi);
  r.free_energy = h_weighted + r.interaction_energy;
  return r;
}

std::string diagnostics_csv_header(std::size_t n) {
  std::string h = "t,dt";
  for (const char* prefix : {"mass_", "H_", "I_", "maxu_", "steady_"}) {
    for (std::size_t i = 1; i <= n; ++i) h += "," + std::string(prefix) + std::to_string(i);
  }
  h += ",K_energy,free_energy,balance_flag";
  return h;
}

std::string diagnostics_csv_row(const DiagnosticsRecord& r) {
  std::string row = format_real(r.t) + "," + format_real(r.dt);
  for (const auto* series : {&r.mass, &r.entropy, &r.second_moment, &r.max_value, &r.steadiness}) {
    for (double v : *series) row += "," + format_real(v);
  }
  row += "," + format_real(r.interaction_energy) + "," + format_real(r.free_energy);
  row += r.balanced ? ",ok" : ",violated";
  return row;
}

}  // namespace aggdiff
