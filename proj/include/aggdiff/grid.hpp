#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace aggdiff {

/// Uniform finite-volume mesh on (-L, L). Cell j spans
/// [-L + j dx, -L + (j+1) dx]; interface k sits at -L + k dx, k = 0..n.
class Grid1D {
public:
  Grid1D(double half_length, std::size_t n_cells);

  /// n_cells = round(2 L cells_per_unit).
  static Grid1D with_resolution(double half_length, double cells_per_unit);

  double half_length() const noexcept { return half_length_; }
  std::size_t size() const noexcept { return n_cells_; }
  double dx() const noexcept { return dx_; }
  double length() const noexcept { return 2.0 * half_length_; }

  double center(std::size_t j) const noexcept {
    return -half_length_ + (static_cast<double>(j) + 0.5) * dx_;
  }
  double interface(std::size_t k) const noexcept {
    return -half_length_ + static_cast<double>(k) * dx_;
  }

  std::vector<double> centers() const;

  friend bool operator==(const Grid1D&, const Grid1D&) = default;

private:
  double half_length_;
  std::size_t n_cells_;
  double dx_;
};

/// Cell averages on a grid. Signed values are allowed (tendencies).
class CellField {
public:
  explicit CellField(const Grid1D& grid, double fill = 0.0);
  CellField(const Grid1D& grid, std::vector<double> values);

  const Grid1D& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator[](std::size_t j) { return values_[j]; }
  double operator[](std::size_t j) const { return values_[j]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  CellField& operator+=(const CellField& other);
  CellField& operator*=(double s);

private:
  Grid1D grid_;
  std::vector<double> values_;
};

CellField operator+(CellField a, const CellField& b);
CellField operator*(double s, CellField a);

/// Cell averages of (mass / 2 ell) on (-ell, ell), with exact partial-cell overlap.
CellField indicator_initial_data(const Grid1D& grid, double ell, double mass);

/// Cell averages of a centred Gaussian of standard deviation sigma and total
/// mass `mass` (computed with erf, so exact up to rounding).
CellField gaussian_initial_data(const Grid1D& grid, double sigma, double mass);

/// Sum of cell averages times dx.
double mass(const CellField& f);

/// Throws GridMismatch unless both fields share a grid.
void require_same_grid(const Grid1D& a, const Grid1D& b, const char* where);

}  // namespace aggdiff
