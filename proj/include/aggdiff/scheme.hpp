#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "aggdiff/grid.hpp"
#include "aggdiff/kernel.hpp"
#include "aggdiff/nonlocal.hpp"

namespace aggdiff {

struct SchemeParams {
  std::vector<double> diffusion;  // D_i > 0
  double theta = 2.0;             // generalized minmod parameter in [1, 2]
  double u_floor = 1e-12;         // regularizes log(u) in the potential only

  std::size_t n_species() const noexcept { return diffusion.size(); }
  void validate() const;
};

/// Default floor: 1e-12 times the mean density of the total mass.
double default_u_floor(double total_mass, const Grid1D& grid);

/// The nonlocal part of the potential, sum_l K_il * u_l, for every species.
/// Kernels of the form alpha_il K share one plan per source species.
class Interaction {
public:
  Interaction(KernelMatrix kernels, const Grid1D& grid);

  const KernelMatrix& kernels() const noexcept { return kernels_; }
  const Grid1D& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return kernels_.size(); }

  /// out[i][j] = sum_l (K_il * u_l)(x_j).
  void apply(const std::vector<CellField>& fields, std::vector<std::vector<double>>& out) const;

  /// (K_il * u)(x_j) for one pair.
  CellField pair(std::size_t i, std::size_t l, const CellField& u) const;

private:
  KernelMatrix kernels_;
  Grid1D grid_;
  std::vector<ConvolutionPlan> plans_;  // one base plan, or n*n plans row-major
  bool factored_ = false;
};

struct SystemState {
  double t = 0.0;
  std::vector<CellField> fields;
  SchemeParams params;
  std::shared_ptr<const Interaction> interaction;

  std::size_t n_species() const noexcept { return fields.size(); }
  const Grid1D& grid() const { return fields.front().grid(); }
  const KernelMatrix& kernels() const { return interaction->kernels(); }
};

/// Builds and validates a state; all fields must share one grid.
SystemState make_state(std::vector<CellField> fields, SchemeParams params, KernelMatrix kernels);

/// xi_i = D_i log(max(u_i, u_floor)) + sum_l K_il * u_l at cell centres.
CellField potential(const SystemState& state, std::size_t species);

/// v at the n+1 interfaces: -(xi_{j+1} - xi_j)/dx inside, zero on the walls.
std::vector<double> velocities(const SystemState& state, std::size_t species);

struct InterfaceValues {
  std::vector<double> east;  // u at the right edge of each cell
  std::vector<double> west;  // u at the left edge of each cell
  std::vector<double> slope;
};

/// Limited piecewise-linear reconstruction, clipped at zero.
InterfaceValues reconstruct_interface_values(const CellField& u, double theta);

/// Generalized minmod of three slopes.
double minmod(double a, double b, double c) noexcept;

struct Tendency {
  std::vector<CellField> du_dt;
  double max_speed = 0.0;  // max |v| over species and interfaces
};

/// Semi-discrete right-hand side with upwind fluxes and no-flux walls.
Tendency evaluate(const SystemState& state);

inline std::vector<CellField> rhs(const SystemState& state) { return evaluate(state).du_dt; }

}  // namespace aggdiff
