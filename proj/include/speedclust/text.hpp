#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Small text helpers shared by the CSV readers and writers.
namespace speedclust::text {

/// Splits one CSV line. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv(std::string_view line);

/// Quotes a field if it contains a comma, quote or newline.
std::string csv_field(std::string_view field);

/// Shortest round-trip decimal; integral values keep a trailing ".0".
std::string format_double(double value);

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

std::string_view trim(std::string_view s);

} // namespace speedclust::text
