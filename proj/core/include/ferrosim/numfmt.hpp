// numfmt.hpp
// Lossless decimal formatting and strict parsing of doubles.

#pragma once

#include <string>
#include <string_view>

namespace ferrosim {

/// %.17g formatting; parses back to the identical double.
std::string format_double(double v);

/// Parses the whole of `text` as a double. Returns false on any trailing
/// characters or empty input.
bool parse_double(std::string_view text, double& out);

bool parse_int(std::string_view text, long long& out);

} // namespace ferrosim
