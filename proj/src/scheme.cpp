#include "aggdiff/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aggdiff/error.hpp"

namespace aggdiff {

void SchemeParams::validate() const {
  if (diffusion.empty()) throw InvalidParameter("scheme: need at least one species");
  for (double d : diffusion) {
    if (!(d > 0.0) || !std::isfinite(d)) throw InvalidParameter("scheme: diffusion rates must be positive");
  }
  if (!(theta >= 1.0 && theta <= 2.0)) throw InvalidParameter("scheme: theta must lie in [1, 2]");
  if (!(u_floor > 0.0 && u_floor <= 1e-6)) throw InvalidParameter("scheme: u_floor must lie in (0, 1e-6]");
}

double default_u_floor(double total_mass, const Grid1D& grid) {
  const double f = 1e-12 * total_mass / grid.length();
  return f > 0.0 ? std::min(f, 1e-6) : 1e-12;
}

Interaction::Interaction(KernelMatrix kernels, const Grid1D& grid)
    : kernels_(std::move(kernels)), grid_(grid) {
  if (kernels_.base()) {
    factored_ = true;
    plans_.push_back(ConvolutionPlan::automatic(*kernels_.base(), grid_));
    return;
  }
  const std::size_t n = kernels_.size();
  plans_.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < n; ++l) plans_.push_back(ConvolutionPlan::automatic(kernels_(i, l), grid_));
  }
}

void Interaction::apply(const std::vector<CellField>& fields, std::vector<std::vector<double>>& out) const {
  const std::size_t n = kernels_.size();
  const std::size_t cells = grid_.size();
  if (fields.size() != n) throw InvalidParameter("interaction: species count mismatch");
  out.assign(n, std::vector<double>(cells, 0.0));
  std::vector<double> conv(cells);
  if (factored_) {
    const auto& alpha = *kernels_.scale_matrix();
    for (std::size_t l = 0; l < n; ++l) {
      bool used = false;
      for (std::size_t i = 0; i < n; ++i) used = used || alpha[i][l] != 0.0;
      if (!used) continue;
      plans_.front().convolve_into(fields[l].values(), conv);
      for (std::size_t i = 0; i < n; ++i) {
        const double a = alpha[i][l];
        if (a == 0.0) continue;
        for (std::size_t j = 0; j < cells; ++j) out[i][j] += a * conv[j];
      }
    }
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < n; ++l) {
      if (kernels_(i, l).is_zero()) continue;
      plans_[i * n + l].convolve_into(fields[l].values(), conv);
      for (std::size_t j = 0; j < cells; ++j) out[i][j] += conv[j];
    }
  }
}

CellField Interaction::pair(std::size_t i, std::size_t l, const CellField& u) const {
  if (factored_) {
    CellField c = plans_.front().convolve(u);
    c *= (*kernels_.scale_matrix())[i][l];
    return c;
  }
  return plans_[i * kernels_.size() + l].convolve(u);
}

SystemState make_state(std::vector<CellField> fields, SchemeParams params, KernelMatrix kernels) {
  params.validate();
  if (fields.size() != params.n_species()) throw InvalidParameter("state: field count differs from species count");
  if (kernels.size() != fields.size()) throw InvalidParameter("state: kernel matrix size differs from species count");
  for (const auto& f : fields) {
    require_same_grid(fields.front().grid(), f.grid(), "state");
    for (double v : f.values()) {
      if (!std::isfinite(v)) throw InvalidParameter("state: non-finite initial value");
    }
  }
  SystemState s;
  s.interaction = std::make_shared<const Interaction>(std::move(kernels), fields.front().grid());
  s.fields = std::move(fields);
  s.params = std::move(params);
  return s;
}

namespace {

void potential_into(const SystemState& state, std::size_t i, std::span<const double> nonlocal,
                    std::span<double> xi) {
  const double d = state.params.diffusion[i];
  const double floor = state.params.u_floor;
  const auto u = state.fields[i].values();
  for (std::size_t j = 0; j < u.size(); ++j) xi[j] = d * std::log(std::max(u[j], floor)) + nonlocal[j];
}

void velocities_into(std::span<const double> xi, double dx, std::span<double> v) {
  const std::size_t n = xi.size();
  v[0] = 0.0;
  v[n] = 0.0;
  const double inv = 1.0 / dx;
  for (std::size_t k = 1; k < n; ++k) v[k] = -(xi[k] - xi[k - 1]) * inv;
}

}  // namespace

CellField potential(const SystemState& state, std::size_t species) {
  std::vector<std::vector<double>> nonlocal;
  state.interaction->apply(state.fields, nonlocal);
  CellField xi(state.grid());
  potential_into(state, species, nonlocal[species], xi.values());
  return xi;
}

std::vector<double> velocities(const SystemState& state, std::size_t species) {
  const CellField xi = potential(state, species);
  std::vector<double> v(xi.size() + 1);
  velocities_into(xi.values(), state.grid().dx(), v);
  return v;
}

namespace {

inline double minmod3(double a, double b, double c) noexcept {
  if (a > 0.0 && b > 0.0 && c > 0.0) return std::min({a, b, c});
  if (a < 0.0 && b < 0.0 && c < 0.0) return std::max({a, b, c});
  return 0.0;
}

void reconstruct_into(std::span<const double> u, double dx, double theta, std::span<double> east,
                      std::span<double> west, std::span<double> slope) {
  const std::size_t n = u.size();
  const double inv = 1.0 / dx;
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const double back = (u[j] - u[j - 1]) * inv;
    const double fwd = (u[j + 1] - u[j]) * inv;
    slope[j] = minmod3(theta * back, 0.5 * (back + fwd), theta * fwd);
  }
  // Walls: one-sided difference, limited so neither edge value goes negative.
  auto wall = [&](double diff, double centre) {
    const double cap = 2.0 * std::max(centre, 0.0) * inv;
    return std::clamp(diff, -cap, cap);
  };
  slope[0] = wall((u[1] - u[0]) * inv, u[0]);
  slope[n - 1] = wall((u[n - 1] - u[n - 2]) * inv, u[n - 1]);
  const double half = 0.5 * dx;
  for (std::size_t j = 0; j < n; ++j) {
    east[j] = std::max(u[j] + half * slope[j], 0.0);
    west[j] = std::max(u[j] - half * slope[j], 0.0);
  }
}

}  // namespace

double minmod(double a, double b, double c) noexcept { return minmod3(a, b, c); }

InterfaceValues reconstruct_interface_values(const CellField& u, double theta) {
  if (!(theta >= 1.0 && theta <= 2.0)) throw InvalidParameter("reconstruct: theta must lie in [1, 2]");
  const std::size_t n = u.size();
  InterfaceValues r{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
  reconstruct_into(u.values(), u.grid().dx(), theta, r.east, r.west, r.slope);
  return r;
}

Tendency evaluate(const SystemState& state) {
  const std::size_t species = state.n_species();
  const Grid1D& grid = state.grid();
  const std::size_t n = grid.size();
  const double dx = grid.dx();

  std::vector<std::vector<double>> nonlocal;
  state.interaction->apply(state.fields, nonlocal);

  Tendency out;
  out.du_dt.reserve(species);
  thread_local std::vector<double> xi, v, east, west, slope, flux;
  xi.resize(n);
  v.resize(n + 1);
  east.resize(n);
  west.resize(n);
  slope.resize(n);
  flux.resize(n + 1);

  for (std::size_t i = 0; i < species; ++i) {
    potential_into(state, i, nonlocal[i], xi);
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::isfinite(xi[j])) {
        throw NumericalError("non-finite potential in species " + std::to_string(i + 1) + " at cell " +
                                 std::to_string(j),
                             static_cast<std::ptrdiff_t>(j));
      }
    }
    velocities_into(xi, dx, v);
    reconstruct_into(state.fields[i].values(), dx, state.params.theta, east, west, slope);

    flux[0] = 0.0;
    flux[n] = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
      const double vk = v[k];
      flux[k] = vk > 0.0 ? vk * east[k - 1] : vk * west[k];
      out.max_speed = std::max(out.max_speed, std::abs(vk));
    }
    CellField du(grid);
    const double inv = 1.0 / dx;
    for (std::size_t j = 0; j < n; ++j) du[j] = -(flux[j + 1] - flux[j]) * inv;
    out.du_dt.push_back(std::move(du));
  }
  return out;
}

}  // namespace aggdiff
