#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "wvamp/cli/scan.hpp"

namespace wvamp::cli {

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

/// Wraps a field in double quotes (doubling inner quotes) when it contains a
/// comma, quote, CR or LF.
std::string quote_field(std::string_view field);

std::vector<std::string> csv_header(const ScanLayout& layout);
std::vector<std::string> csv_record(const ScanRow& row, const ScanLayout& layout);

/// Header plus one record per row, LF line endings.
void write_csv(const ScanResult& result, std::ostream& out);

/// Writes to `path`; throws IoError when the file cannot be written.
void emit_csv(const ScanResult& result, const std::filesystem::path& path);

} // namespace wvamp::cli
