#pragma once

// Brute-force reference implementations used only by the tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

namespace oracle {

inline double overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

/// (K*u)(x_j) for a top-hat of height -alpha/(2R) on [-R, R], u piecewise
/// constant on the cells of (-L, L). O(n^2).
inline std::vector<double> tophat_convolution(double alpha, double radius, double half_length,
                                              const std::vector<double>& u) {
  const std::size_t n = u.size();
  const double dx = 2.0 * half_length / static_cast<double>(n);
  const double h = -alpha / (2.0 * radius);
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double x = -half_length + (static_cast<double>(j) + 0.5) * dx;
    double s = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      const double c0 = -half_length + static_cast<double>(l) * dx;
      s += u[l] * overlap(c0, c0 + dx, x - radius, x + radius);
    }
    out[j] = h * s;
  }
  return out;
}

/// Same for a piecewise-constant kernel with `values` on cells of width kdx starting at x0.
inline std::vector<double> sampled_convolution(const std::vector<double>& values, double kdx, double x0,
                                               double half_length, const std::vector<double>& u) {
  const std::size_t n = u.size();
  const double dx = 2.0 * half_length / static_cast<double>(n);
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double x = -half_length + (static_cast<double>(j) + 0.5) * dx;
    double s = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      if (u[l] == 0.0) continue;
      // y in cell l  <=>  x - y in [x - c1, x - c0]
      const double c0 = -half_length + static_cast<double>(l) * dx;
      const double z0 = x - c0 - dx;
      const double z1 = x - c0;
      double w = 0.0;
      for (std::size_t m = 0; m < values.size(); ++m) {
        const double k0 = x0 + static_cast<double>(m) * kdx;
        w += values[m] * overlap(z0, z1, k0, k0 + kdx);
      }
      s += u[l] * w;
    }
    out[j] = s;
  }
  return out;
}

/// L2 norm of the centred-difference derivative of the autocorrelation
/// c_p = sum_m k_m k_{m+p} dx, computed by the double loop.
inline double h4_norm(const std::vector<double>& k, double dx) {
  const auto n = static_cast<std::ptrdiff_t>(k.size());
  std::vector<double> c(static_cast<std::size_t>(2 * n - 1), 0.0);
  for (std::ptrdiff_t p = -(n - 1); p <= n - 1; ++p) {
    double s = 0.0;
    for (std::ptrdiff_t m = 0; m < n; ++m) {
      const std::ptrdiff_t q = m + p;
      if (q >= 0 && q < n) s += k[static_cast<std::size_t>(m)] * k[static_cast<std::size_t>(q)];
    }
    c[static_cast<std::size_t>(p + n - 1)] = s * dx;
  }
  auto at = [&](std::ptrdiff_t i) {
    return i < 0 || i >= static_cast<std::ptrdiff_t>(c.size()) ? 0.0 : c[static_cast<std::size_t>(i)];
  };
  double sum = 0.0;
  for (std::ptrdiff_t i = -1; i <= static_cast<std::ptrdiff_t>(c.size()); ++i) {
    const double g = (at(i + 1) - at(i - 1)) / (2.0 * dx);
    sum += g * g * dx;
  }
  return std::sqrt(sum);
}

/// Exact ||d/dy (K star K)||_2 for a top-hat: the autocorrelation is a
/// triangle of slope h^2 on (-2R, 2R), so the norm is h^2 sqrt(4R).
inline double tophat_h4_exact(double alpha, double radius) {
  const double h = alpha / (2.0 * radius);
  return h * h * std::sqrt(4.0 * radius);
}

inline std::vector<double> random_field(std::mt19937_64& rng, std::size_t n, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace oracle
