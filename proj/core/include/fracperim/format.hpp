#pragma once

#include <string>

namespace fracperim {

/// Locale-independent shortest round-trip text for a double (17 significant digits).
std::string format_number(double value);

}  // namespace fracperim
