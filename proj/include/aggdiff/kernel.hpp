#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace aggdiff {

/// Piecewise-constant top-hat potential: -alpha/(2R) on [-R, R], zero outside.
/// alpha > 0 is attraction, alpha < 0 repulsion.
struct TopHat {
  double alpha;
  double radius;
};

/// Kernel given by cell averages on its own uniform grid starting at `x0`.
struct Sampled {
  std::vector<double> values;
  double dx;
  double x0;
};

/**
 * Bounded interaction kernel in one dimension.
 *
 * Both forms are piecewise constant, so point values, integrals over
 * intervals and total variation are all exact. Kernels are immutable.
 */
class Kernel {
public:
  static Kernel tophat(double alpha, double radius);
  static Kernel sampled(std::vector<double> values, double dx, double x0);

  const std::variant<TopHat, Sampled>& form() const noexcept { return form_; }
  bool is_tophat() const noexcept { return std::holds_alternative<TopHat>(form_); }

  /// Pointwise value; cells are closed on the left.
  double operator()(double x) const;

  /// Exact integral of the kernel over [a, b] (a <= b not required).
  double integral(double a, double b) const;

  /// Smallest interval [left, right] outside which the kernel vanishes.
  double support_left() const;
  double support_right() const;

  /// c * K.
  Kernel scaled(double factor) const;

  bool is_zero() const;

private:
  explicit Kernel(std::variant<TopHat, Sampled> form);
  double antiderivative(double x) const;

  std::variant<TopHat, Sampled> form_;
  std::vector<double> cumulative_;  // Sampled only: integral from x0 to each cell edge
};

/// n x n table of kernels K_ij. When every entry is alpha_ij times one base
/// kernel, `base()` and `scale_matrix()` expose that factorization.
class KernelMatrix {
public:
  KernelMatrix(std::size_t n, std::vector<Kernel> entries);
  static KernelMatrix scaled(const Kernel& base, const std::vector<std::vector<double>>& alpha);

  std::size_t size() const noexcept { return n_; }
  const Kernel& operator()(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }

  const std::optional<Kernel>& base() const noexcept { return base_; }
  const std::optional<std::vector<std::vector<double>>>& scale_matrix() const noexcept {
    return scale_;
  }

private:
  std::size_t n_;
  std::vector<Kernel> entries_;
  std::optional<Kernel> base_;
  std::optional<std::vector<std::vector<double>>> scale_;
};

/// Norms and hypothesis checks for one kernel.
struct KernelAnalysis {
  double linf_norm = 0.0;
  double l1_norm = 0.0;
  double tv_norm = 0.0;  // +inf when unbounded (never for piecewise-constant kernels)
  bool symmetric = false;
  bool compact_support = false;
  double support_radius = 0.0;
  double h4_norm = 0.0;              // discrete L2 norm of d/dx of the autocorrelation
  double h4_fourier_integral = 0.0;  // truncated at the grid Nyquist frequency
  double h4_fourier_refined = 0.0;   // same integral at dx/2
  bool h4_fourier_stable = false;    // relative change under halving dx below 10%
  double dx = 0.0;
};

/// Result of solving pi_i alpha_ij = pi_j alpha_ji.
struct BalanceResult {
  std::optional<std::vector<double>> weights;  // pi with pi_0 = 1 when balanced
  std::vector<std::size_t> witness;            // zero-based species on the violating edge/cycle
  std::string reason;

  bool balanced() const noexcept { return weights.has_value(); }
};

/// Which existence/regularity results apply to a configuration. Only the
/// kernel and mass preconditions are checked; initial-data smoothness is not.
struct TheoremApplicability {
  bool small_mass_existence = false;     // H1 and every c_i > 0
  bool arbitrary_mass_existence = false; // H1-H3, plus H5 when n > 1
  bool strong_uniqueness = false;        // arbitrary mass, or small mass with H4
  bool classical_regularity = false;     // small mass with H2, H6; or arbitrary mass with H6
};

/// Report covering a full kernel matrix together with masses and diffusion rates.
struct HypothesisReport {
  std::size_t n = 0;
  std::vector<KernelAnalysis> entries;  // row-major n x n
  bool h1 = false;
  bool h2 = false;
  bool h3 = false;
  bool h4 = false;  // analytic: H1 and H2 imply H4
  bool h6 = false;
  BalanceResult detailed_balance;
  std::vector<double> small_mass_constants;
  TheoremApplicability theorems;

  const KernelAnalysis& entry(std::size_t i, std::size_t j) const { return entries[i * n + j]; }
};

/// Computes norms, symmetry, support and the H4 quantities on a grid of width dx.
KernelAnalysis analyze(const Kernel& k, double dx);

/// Cell averages of k on cells of width dx centred at m*dx, m = -M..M,
/// with M large enough to cover the support.
std::vector<double> sample_centered(const Kernel& k, double dx);

BalanceResult solve_detailed_balance(const std::vector<std::vector<double>>& scale_matrix);

/// Detailed balance for general kernels: pairs must be positively proportional.
BalanceResult solve_detailed_balance(const KernelMatrix& kernels);

/// c_i = D_i - 1/2 sum_j (m_i ||K_ij||_inf + m_j ||K_ji||_inf).
std::vector<double> small_mass_constants(const std::vector<double>& diffusion,
                                         const std::vector<double>& masses,
                                         const KernelMatrix& kernels);

HypothesisReport assess(const KernelMatrix& kernels, const std::vector<double>& diffusion,
                        const std::vector<double>& masses, double dx);

}  // namespace aggdiff
