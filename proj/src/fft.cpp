#include "fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <stdexcept>

namespace aggdiff::detail {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct RealFft::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;

  explicit Plans(std::size_t n) {
    std::vector<double> real(n);
    std::vector<std::complex<double>> spec(n / 2 + 1);
    auto* cplx = reinterpret_cast<fftw_complex*>(spec.data());
    const int len = static_cast<int>(n);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    std::lock_guard lock(planner_mutex());
    r2c = fftw_plan_dft_r2c_1d(len, real.data(), cplx, flags);
    c2r = fftw_plan_dft_c2r_1d(len, cplx, real.data(), flags | FFTW_DESTROY_INPUT);
    if (r2c == nullptr || c2r == nullptr) throw std::runtime_error("FFTW planning failed");
  }

  ~Plans() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(r2c);
    fftw_destroy_plan(c2r);
  }

  Plans(const Plans&) = delete;
  Plans& operator=(const Plans&) = delete;
};

RealFft::RealFft(std::size_t size) : size_(size), plans_(std::make_shared<const Plans>(size)) {}

void RealFft::forward(const double* in, std::complex<double>* out) const {
  // r2c does not modify its input, but the FFTW signature is non-const.
  fftw_execute_dft_r2c(plans_->r2c, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
}

void RealFft::inverse(const std::complex<double>* in, double* out) const {
  std::vector<std::complex<double>> scratch(in, in + spectrum_size());
  fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(scratch.data()), out);
}

std::size_t good_fft_size(std::size_t n) {
  std::size_t best = 1;
  while (best < n) best *= 2;
  for (std::size_t p2 = 1; p2 < best; p2 *= 2) {
    for (std::size_t p3 = p2; p3 < best; p3 *= 3) {
      for (std::size_t p5 = p3; p5 < best; p5 *= 5) {
        if (p5 >= n) best = std::min(best, p5);
      }
    }
  }
  return best;
}

}  // namespace aggdiff::detail
