#pragma once

#include <string>
#include <string_view>

namespace vrisim {

/// Shortest round-trip decimal form of v, locale-independent.
std::string format_double(double v);

/// Strict parse of a full token produced by format_double (or any decimal /
/// scientific literal). Throws std::invalid_argument on trailing junk.
double parse_double(std::string_view s);

long long parse_int(std::string_view s);

}  // namespace vrisim
