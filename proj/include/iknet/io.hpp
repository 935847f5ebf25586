// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace iknet {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based source line of each row, for error messages.
  std::vector<std::size_t> lines;
};

/// Reads a plain comma-separated file (no quoting). Blank lines are skipped;
/// every row must have as many fields as the header.
CsvTable read_csv(const std::filesystem::path& path);
std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

/// Parses a finite double; throws ValidationError with `context` otherwise.
double parse_double(std::string_view text, std::string_view context);
/// Shortest text that round-trips to the same double.
std::string format_double(double value);

/// Throws MissingDataError if the file cannot be opened.
std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary file and renames, creating parent directories.
void write_file(const std::filesystem::path& path, std::string_view content);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace iknet
