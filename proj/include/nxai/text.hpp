#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nxai::text {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

std::optional<double> parse_double(std::string_view s);
std::optional<std::size_t> parse_index(std::string_view s);

std::vector<std::string_view> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

/// Reads a whole file; returns nullopt when it cannot be opened.
std::optional<std::string> read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

} // namespace nxai::text
