#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aggdiff {

/// Raised when a constructor or operation receives a value outside its domain.
class InvalidParameter : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A field and a convolution plan (or two fields) live on different grids.
class GridMismatch : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values or a collapsed time step during integration.
class NumericalError : public std::runtime_error {
public:
  NumericalError(const std::string& what, std::ptrdiff_t cell = -1)
      : std::runtime_error(what), cell_(cell) {}

  /// Offending cell index, or -1 when the failure is not cell-local.
  std::ptrdiff_t cell() const noexcept { return cell_; }

private:
  std::ptrdiff_t cell_;
};

/// Configuration failed validation; `key()` names the offending entry.
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(message), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

private:
  std::string key_;
};

}  // namespace aggdiff
