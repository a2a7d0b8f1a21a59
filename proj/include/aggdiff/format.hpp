#pragma once

#include <string>

namespace aggdiff {

/// 17 significant digits, enough to round-trip a double; "inf"/"-inf"/"nan" otherwise.
std::string format_real(double v);

/// Shortest decimal that round-trips (used for snapshot file names: 2.7 -> "2.7").
std::string format_short(double v);

}  // namespace aggdiff
