#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mscca::io {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header name; ShapeError when absent.
  std::size_t column(const std::string& name) const;
};

/// Quoted fields may hold commas, doubled quotes and line breaks. CRLF line
/// ends and a leading UTF-8 BOM are accepted, blank lines are skipped.
/// Throws ShapeError on ragged rows, a bad header or broken quoting, and
/// MissingValueError on an empty cell.
CsvTable parse_csv(std::string_view text);

/// IoError when the file cannot be read.
CsvTable read_csv(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);

std::string csv_field(std::string_view value);
std::string csv_line(const std::vector<std::string>& fields);

/// %.15g with negative zero printed as 0.
std::string format_number(double v);

/// Writes to a sibling temp file, then renames over `path`. Creates missing
/// parent directories. Throws IoError.
void write_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace mscca::io
