#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace serialtrack {

// Shortest decimal text that parses back to the same double (to_chars).
std::string format_double(double v);

std::vector<std::string_view> split_csv(std::string_view line);

// Locale-free strict numeric parsing of a whole (trimmed) field.
std::optional<double> parse_double_field(std::string_view field);
std::optional<long long> parse_int_field(std::string_view field);

std::string_view trim(std::string_view s);

}  // namespace serialtrack
