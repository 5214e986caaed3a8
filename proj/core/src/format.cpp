#include "spur/format.hpp"

#include <cstdio>

namespace spur {

std::string format_double(double value) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", value);
  return std::string(buf, static_cast<std::size_t>(n));
}

std::string format_fixed(double value, int digits) {
  char buf[64];
  const int n = std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  return std::string(buf, static_cast<std::size_t>(n));
}

}  // namespace spur
