#include "aggdiff/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "aggdiff/error.hpp"

namespace aggdiff {

Grid1D::Grid1D(double half_length, std::size_t n_cells)
    : half_length_(half_length), n_cells_(n_cells), dx_(2.0 * half_length / static_cast<double>(n_cells)) {
  if (!(half_length > 0.0) || !std::isfinite(half_length)) {
    throw InvalidParameter("grid: half-length L must be positive");
  }
  if (n_cells < 4) throw InvalidParameter("grid: need at least 4 cells");
}

Grid1D Grid1D::with_resolution(double half_length, double cells_per_unit) {
  if (!(cells_per_unit > 0.0)) throw InvalidParameter("grid: cells_per_unit must be positive");
  const double n = std::round(2.0 * half_length * cells_per_unit);
  return Grid1D(half_length, static_cast<std::size_t>(std::max(n, 0.0)));
}

std::vector<double> Grid1D::centers() const {
  std::vector<double> x(n_cells_);
  for (std::size_t j = 0; j < n_cells_; ++j) x[j] = center(j);
  return x;
}

CellField::CellField(const Grid1D& grid, double fill) : grid_(grid), values_(grid.size(), fill) {}

CellField::CellField(const Grid1D& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) throw GridMismatch("cell field: value count differs from grid size");
}

CellField& CellField::operator+=(const CellField& other) {
  require_same_grid(grid_, other.grid_, "cell field addition");
  for (std::size_t j = 0; j < values_.size(); ++j) values_[j] += other.values_[j];
  return *this;
}

CellField& CellField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

CellField operator+(CellField a, const CellField& b) { return a += b; }
CellField operator*(double s, CellField a) { return a *= s; }

CellField indicator_initial_data(const Grid1D& grid, double ell, double mass) {
  if (!(ell > 0.0)) throw InvalidParameter("indicator: ell must be positive");
  if (!(ell < grid.half_length())) throw InvalidParameter("indicator: ell must be smaller than L");
  if (!(mass >= 0.0) || !std::isfinite(mass)) throw InvalidParameter("indicator: mass must be non-negative");
  CellField f(grid);
  const double height = mass / (2.0 * ell);
  const double dx = grid.dx();
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double lo = std::max(grid.interface(j), -ell);
    const double hi = std::min(grid.interface(j + 1), ell);
    if (hi > lo) f[j] = height * ((hi - lo) / dx);
  }
  return f;
}

CellField gaussian_initial_data(const Grid1D& grid, double sigma, double mass) {
  if (!(sigma > 0.0)) throw InvalidParameter("gaussian: sigma must be positive");
  if (!(mass >= 0.0) || !std::isfinite(mass)) throw InvalidParameter("gaussian: mass must be non-negative");
  CellField f(grid);
  const double scale = 1.0 / (sigma * std::numbers::sqrt2);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double a = grid.interface(j) * scale;
    const double b = grid.interface(j + 1) * scale;
    // erfc on the far side keeps the tails accurate.
    const double w = (a >= 0.0) ? 0.5 * (std::erfc(a) - std::erfc(b))
                                : (b <= 0.0 ? 0.5 * (std::erfc(-b) - std::erfc(-a))
                                            : 0.5 * (std::erf(b) - std::erf(a)));
    f[j] = mass * w / grid.dx();
  }
  return f;
}

double mass(const CellField& f) {
  double s = 0.0;
  for (double v : f.values()) s += v;
  return s * f.grid().dx();
}

void require_same_grid(const Grid1D& a, const Grid1D& b, const char* where) {
  if (!(a == b)) throw GridMismatch(std::string(where) + ": grids differ");
}

}  // namespace aggdiff
