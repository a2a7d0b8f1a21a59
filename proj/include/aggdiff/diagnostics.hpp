#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "aggdiff/scheme.hpp"

namespace aggdiff {

/// Essential-support threshold used for the steadiness indicator and plots.
inline constexpr double kDefaultEssentialThreshold = 1e-4;

/// H[u] = sum u log u dx with 0 log 0 = 0. Throws InvalidParameter on negative cells.
double entropy(const CellField& f);

/// I[u] = sum u x^2 dx (midpoint rule).
double second_moment(const CellField& f);

/// Measure of {u > threshold}.
double support_measure(const CellField& f, double threshold);

/// Weights used in the n-species energy: pi from detailed balance when it
/// holds, otherwise all ones with `balanced == false`.
struct EnergyWeights {
  std::vector<double> pi;
  bool balanced = true;
};

EnergyWeights energy_weights(const KernelMatrix& kernels);

/// 1/2 sum_{i,l} pi_i sum_j u_ij (K_il * u_l)_j dx.
double interaction_energy(const SystemState& state, const std::vector<double>& pi);

/// sum_i D_i pi_i H[u_i] + interaction energy.
double free_energy(const SystemState& state, const std::vector<double>& pi);

struct PotentialStats {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t cells = 0;
};

/// Mean and population standard deviation of xi_i over {u_i > u_ess}.
PotentialStats potential_stats(const SystemState& state, std::size_t species, double u_ess);

/// Population std of xi_i over {u_i > u_ess}; +inf when no cell qualifies.
double steadiness(const SystemState& state, std::size_t species, double u_ess = kDefaultEssentialThreshold);

/// Cells that exceed `threshold` and are strict maxima of their neighbourhood
/// (plateaus count once; a wall cell only compares with its one neighbour).
/// Maxima whose prominence is below `min_prominence` are not counted.
std::size_t count_local_maxima(const CellField& f, double threshold, double min_prominence = 0.0);

struct DiagnosticsRecord {
  double t = 0.0;
  double dt = 0.0;
  std::vector<double> mass;
  std::vector<double> entropy;
  std::vector<double> second_moment;
  std::vector<double> max_value;
  std::vector<double> support_measure;
  std::vector<double> steadiness;
  double interaction_energy = 0.0;
  double free_energy = 0.0;
  bool balanced = true;
};

DiagnosticsRecord make_record(const SystemState& state, double dt, const EnergyWeights& weights,
                              double u_ess = kDefaultEssentialThreshold);

/// `t,dt,mass_1..n,H_1..n,I_1..n,maxu_1..n,steady_1..n,K_energy,free_energy,balance_flag`
std::string diagnostics_csv_header(std::size_t n_species);
std::string diagnostics_csv_row(const DiagnosticsRecord& rec);

}  // namespace aggdiff
