#include "fracperim/format.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace fracperim {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value, std::chars_format::general, 17);
  if (result.ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buffer, result.ptr);
}

}  // namespace fracperim
