#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace windcast {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    /// 1-based source line of each row, for diagnostics.
    std::vector<std::size_t> line_numbers;

    /// Column index by header name, or npos.
    std::size_t column(std::string_view name) const;
};

/// RFC-4180 fields of one record (quoted fields may contain commas and "").
std::vector<std::string> split_csv_line(std::string_view line);

/// Reads a header + records file; blank lines are skipped, CRLF accepted.
CsvTable read_csv(const std::filesystem::path& path);

/// Quotes a field when it contains a comma, quote or newline.
std::string csv_field(std::string_view text);

/// Shortest round-trip decimal; NaN becomes an empty cell.
std::string format_real(double v);

/// Parses a decimal with `.` separator. Empty, "NaN" and garbage give nullopt.
std::optional<double> parse_real(std::string_view text);

} // namespace windcast
