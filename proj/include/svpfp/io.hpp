#pragma once

#include <cstddef>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace svpfp::io {

/// Shortest round-trip decimal form; "inf", "-inf", "nan" for non-finite.
std::string format_double(double value);

/// RFC 4180 writer: CRLF-free (LF) lines, fields quoted only when needed.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& fields);
  void row(const std::vector<double>& values);

 private:
  std::ofstream out_;
  std::size_t columns_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a named column; throws a shape error naming the column.
  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

void ensure_directory(const std::string& path);
std::string join_path(const std::string& dir, const std::string& file);
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

/// Raw little-endian f64 array.
void write_raw_f64(const std::string& path, std::span<const double> values);
std::vector<double> read_raw_f64(const std::string& path);

}  // namespace svpfp::io
