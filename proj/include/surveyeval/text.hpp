#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace surveyeval::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string_view> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Collapses every whitespace run to one space and trims the ends.
std::string normalize_whitespace(std::string_view s);

std::string read_file(const std::filesystem::path& path);
// Writes atomically enough for our purposes: temp file then rename.
void write_file(const std::filesystem::path& path, std::string_view contents);

// Fixed two-decimal rendering with round-half-up that is robust to binary
// representation error (e.g. 69.75/20 renders as 3.49, 44.59/20 as 2.23).
std::string fixed2(double value);

}  // namespace surveyeval::text
