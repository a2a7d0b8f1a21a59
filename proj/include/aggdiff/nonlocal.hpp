#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

#include "aggdiff/grid.hpp"
#include "aggdiff/kernel.hpp"

namespace aggdiff {

namespace detail {
class RealFft;
}

enum class ConvolutionMethod { TopHatExact, Direct, Spectral };

/**
 * Precomputed operator u -> K*u on a fixed grid.
 *
 * The field is taken as piecewise constant and extended by zero outside
 * (-L, L); the output is (K*u) evaluated exactly at the cell centres. All
 * three methods compute the same quantity:
 *
 *  - TopHatExact: prefix sums of cell mass, O(n) per call;
 *  - Direct: banded sum with weights w_d = int_{(d-1/2)dx}^{(d+1/2)dx} K;
 *  - Spectral: the same banded sum as a zero-padded linear FFT convolution.
 *
 * Plans are immutable and may be shared across threads.
 */
class ConvolutionPlan {
public:
  ConvolutionPlan(const Kernel& kernel, const Grid1D& grid, ConvolutionMethod method);

  /// TopHatExact for top-hat kernels, Direct for narrow sampled kernels, Spectral otherwise.
  static ConvolutionPlan automatic(const Kernel& kernel, const Grid1D& grid);

  ConvolutionMethod method() const noexcept { return method_; }
  const Kernel& kernel() const noexcept { return kernel_; }
  const Grid1D& grid() const noexcept { return grid_; }

  /// Banded weights w_d for d = -half_width()..half_width().
  const std::vector<double>& weights() const noexcept { return weights_; }
  std::ptrdiff_t half_width() const noexcept { return half_width_; }

  CellField convolve(const CellField& u) const;

  /// Writes K*u into `out` (size n), reusing caller storage.
  void convolve_into(std::span<const double> u, std::span<double> out) const;

  /// d/dx (K*u) at the n+1 interfaces; zero at the two boundary interfaces.
  std::vector<double> grad_at_interfaces(const CellField& u) const;

private:
  void tophat_into(std::span<const double> u, std::span<double> out) const;
  void direct_into(std::span<const double> u, std::span<double> out) const;
  void spectral_into(std::span<const double> u, std::span<double> out) const;

  Kernel kernel_;
  Grid1D grid_;
  ConvolutionMethod method_;
  std::vector<double> weights_;
  std::ptrdiff_t half_width_ = 0;
  std::shared_ptr<const detail::RealFft> fft_;
  std::vector<std::complex<double>> weight_spectrum_;
};

inline CellField convolve(const ConvolutionPlan& plan, const CellField& u) { return plan.convolve(u); }

inline std::vector<double> grad_convolve_at_interfaces(const ConvolutionPlan& plan, const CellField& u) {
  return plan.grad_at_interfaces(u);
}

}  // namespace aggdiff
