#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace latefuse::csv {

/// Splits one CSV record. Double-quoted fields may contain commas and
/// doubled quotes; a trailing '\r' is dropped.
std::vector<std::string> split_line(std::string_view line);

/// Quotes a field only when it contains a comma, quote, or newline.
std::string escape(std::string_view field);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

/// Strict numeric parse of a whole token; false on trailing garbage.
bool parse_double(std::string_view token, double& out);

}  // namespace latefuse::csv
