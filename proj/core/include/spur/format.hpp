#pragma once

#include <string>

namespace spur {

// %.17g: round-trips every double; used by all text outputs.
std::string format_double(double value);

// printf-style fixed notation with `digits` decimals.
std::string format_fixed(double value, int digits);

}  // namespace spur
