#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace opskill {

/// Shortest-stable decimal form used in every CSV/DOT output ("%.10g").
std::string format_number(double v);

/// Quotes a CSV field when it contains a separator, quote or newline.
std::string csv_field(std::string_view s);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a partially written output.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace opskill
