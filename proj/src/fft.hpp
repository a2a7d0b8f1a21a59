#pragma once

// Thin RAII wrapper over FFTW real transforms. Plans are created once under a
// global lock (the FFTW planner is not reentrant); execution uses the
// new-array interface so one plan may be shared between threads.

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

namespace aggdiff::detail {

class RealFft {
public:
  explicit RealFft(std::size_t size);

  std::size_t size() const noexcept { return size_; }
  std::size_t spectrum_size() const noexcept { return size_ / 2 + 1; }

  /// in: size() reals; out: spectrum_size() complex values.
  void forward(const double* in, std::complex<double>* out) const;

  /// Unnormalized inverse; the caller divides by size().
  void inverse(const std::complex<double>* in, double* out) const;

private:
  struct Plans;
  std::size_t size_;
  std::shared_ptr<const Plans> plans_;
};

/// Smallest integer >= n whose only prime factors are 2, 3 and 5.
std::size_t good_fft_size(std::size_t n);

}  // namespace aggdiff::detail
