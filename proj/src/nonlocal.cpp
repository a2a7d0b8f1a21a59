#include "aggdiff/nonlocal.hpp"

#include <algorithm>
#include <cmath>

#include "aggdiff/error.hpp"
#include "fft.hpp"

namespace aggdiff {

namespace {
// Sampled kernels narrower than this many cells use the banded sum.
constexpr std::ptrdiff_t kDirectMaxHalfWidth = 48;
}  // namespace

ConvolutionPlan::ConvolutionPlan(const Kernel& kernel, const Grid1D& grid, ConvolutionMethod method)
    : kernel_(kernel), grid_(grid), method_(method) {
  if (method == ConvolutionMethod::TopHatExact && !kernel.is_tophat()) {
    throw InvalidParameter("convolution plan: TopHatExact requires a top-hat kernel");
  }
  const double dx = grid.dx();
  const double reach = std::max(std::abs(kernel.support_left()), std::abs(kernel.support_right()));
  half_width_ = static_cast<std::ptrdiff_t>(std::ceil(reach / dx + 0.5));
  weights_.resize(static_cast<std::size_t>(2 * half_width_ + 1));
  for (std::ptrdiff_t d = -half_width_; d <= half_width_; ++d) {
    const double c = static_cast<double>(d) * dx;
    weights_[static_cast<std::size_t>(d + half_width_)] = kernel.integral(c - 0.5 * dx, c + 0.5 * dx);
  }

  if (method == ConvolutionMethod::Spectral) {
    const std::size_t n = grid.size();
    fft_ = std::make_shared<const detail::RealFft>(
        detail::good_fft_size(n + 2 * static_cast<std::size_t>(half_width_) + 1));
    const std::size_t p = fft_->size();
    std::vector<double> wrapped(p, 0.0);
    for (std::ptrdiff_t d = -half_width_; d <= half_width_; ++d) {
      const auto idx = static_cast<std::size_t>((d % static_cast<std::ptrdiff_t>(p) + static_cast<std::ptrdiff_t>(p)) %
                                                static_cast<std::ptrdiff_t>(p));
      wrapped[idx] += weights_[static_cast<std::size_t>(d + half_width_)];
    }
    weight_spectrum_.resize(fft_->spectrum_size());
    fft_->forward(wrapped.data(), weight_spectrum_.data());
  }
}

ConvolutionPlan ConvolutionPlan::automatic(const Kernel& kernel, const Grid1D& grid) {
  if (kernel.is_tophat()) return ConvolutionPlan(kernel, grid, ConvolutionMethod::TopHatExact);
  ConvolutionPlan direct(kernel, grid, ConvolutionMethod::Direct);
  if (direct.half_width() <= kDirectMaxHalfWidth) return direct;
  return ConvolutionPlan(kernel, grid, ConvolutionMethod::Spectral);
}

CellField ConvolutionPlan::convolve(const CellField& u) const {
  require_same_grid(grid_, u.grid(), "convolve");
  CellField out(grid_);
  convolve_into(u.values(), out.values());
  return out;
}

void ConvolutionPlan::convolve_into(std::span<const double> u, std::span<double> out) const {
  if (u.size() != grid_.size() || out.size() != grid_.size()) {
    throw GridMismatch("convolve: field size differs from plan grid");
  }
  switch (method_) {
    case ConvolutionMethod::TopHatExact:
      tophat_into(u, out);
      break;
    case ConvolutionMethod::Direct:
      direct_into(u, out);
      break;
    case ConvolutionMethod::Spectral:
      spectral_into(u, out);
      break;
  }
}

void ConvolutionPlan::tophat_into(std::span<const double> u, std::span<double> out) const {
  const auto& th = std::get<TopHat>(kernel_.form());
  const auto n = static_cast<std::ptrdiff_t>(grid_.size());
  const double dx = grid_.dx();

  // prefix[k]: sum of u over cells left of interface k.
  thread_local std::vector<double> prefix;
  prefix.resize(static_cast<std::size_t>(n) + 1);
  prefix[0] = 0.0;
  for (std::ptrdiff_t k = 0; k < n; ++k) prefix[k + 1] = prefix[k] + u[k];

  // x_j +- R sits at cell coordinate j + shift: whole part `cell`, fraction `frac`.
  struct Edge {
    std::ptrdiff_t cell;
    double frac;
  };
  auto edge = [](double shift) {
    const double whole = std::floor(shift);
    return Edge{static_cast<std::ptrdiff_t>(whole), shift - whole};
  };
  const double s = th.radius / dx;
  const Edge hi = edge(0.5 + s);
  const Edge lo = edge(0.5 - s);
  auto cumulative = [&](std::ptrdiff_t k, double frac) {
    if (k < 0) return 0.0;
    if (k >= n) return prefix[n];
    return prefix[k] + u[k] * frac;
  };

  const double height = -th.alpha / (2.0 * th.radius) * dx;
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    out[j] = height * (cumulative(j + hi.cell, hi.frac) - cumulative(j + lo.cell, lo.frac));
  }
}

void ConvolutionPlan::direct_into(std::span<const double> u, std::span<double> out) const {
  const auto n = static_cast<std::ptrdiff_t>(grid_.size());
  const double* w = weights_.data() + half_width_;  // w[d], d in [-W, W]
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    const std::ptrdiff_t l_lo = std::max<std::ptrdiff_t>(0, j - half_width_);
    const std::ptrdiff_t l_hi = std::min<std::ptrdiff_t>(n - 1, j + half_width_);
    double s = 0.0;
    for (std::ptrdiff_t l = l_lo; l <= l_hi; ++l) s += w[j - l] * u[static_cast<std::size_t>(l)];
    out[static_cast<std::size_t>(j)] = s;
  }
}

void ConvolutionPlan::spectral_into(std::span<const double> u, std::span<double> out) const {
  const std::size_t p = fft_->size();
  std::vector<double> padded(p, 0.0);
  std::copy(u.begin(), u.end(), padded.begin());
  std::vector<std::complex<double>> spec(fft_->spectrum_size());
  fft_->forward(padded.data(), spec.data());
  for (std::size_t q = 0; q < spec.size(); ++q) spec[q] *= weight_spectrum_[q];
  fft_->inverse(spec.data(), padded.data());
  const double inv = 1.0 / static_cast<double>(p);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = padded[j] * inv;
}

std::vector<double> ConvolutionPlan::grad_at_interfaces(const CellField& u) const {
  require_same_grid(grid_, u.grid(), "grad_convolve_at_interfaces");
  const std::size_t n = grid_.size();
  const double dx = grid_.dx();
  std::vector<double> grad(n + 1, 0.0);

  if (method_ == ConvolutionMethod::TopHatExact) {
    const auto& th = std::get<TopHat>(kernel_.form());
    const double lo = -grid_.half_length();
    // Piecewise-linear interpolation through the cell centres, constant in
    // the two boundary half-cells and zero outside the domain.
    auto reconstructed = [&](double x) {
      if (x < lo || x > grid_.half_length()) return 0.0;
      const double pos = (x - lo) / dx - 0.5;
      if (pos <= 0.0) return u[0];
      if (pos >= static_cast<double>(n - 1)) return u[n - 1];
      const auto k = static_cast<std::size_t>(pos);
      const double frac = pos - static_cast<double>(k);
      return (1.0 - frac) * u[k] + frac * u[k + 1];
    };
    for (std::size_t k = 1; k < n; ++k) {
      const double x = grid_.interface(k);
      grad[k] = -th.alpha * (reconstructed(x + th.radius) - reconstructed(x - th.radius)) / (2.0 * th.radius);
    }
    return grad;
  }

  const CellField c = convolve(u);
  for (std::size_t k = 1; k < n; ++k) grad[k] = (c[k] - c[k - 1]) / dx;
  return grad;
}

}  // namespace aggdiff
