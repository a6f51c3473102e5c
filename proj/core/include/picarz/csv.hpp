#pragma once

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "picarz/geometry.hpp"

namespace picarz {

/// Comma-separated fields; no quoting, surrounding whitespace trimmed.
std::vector<std::string> split_csv_line(std::string_view line);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position; throws InputError for a missing column.
  Index column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

/// Header row followed by data rows of the same width. Blank lines skipped.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::filesystem::path& path);

double parse_double(std::string_view text, std::string_view what);
long parse_long(std::string_view text, std::string_view what);

/// Shortest text that round-trips the value; "nan" and "inf" for non-finite.
std::string format_double(double x);

/// Streams that throw IoError when the file cannot be opened.
std::ifstream open_input(const std::filesystem::path& path);
std::ofstream open_output(const std::filesystem::path& path);

/// Dense matrix with a header row.
void write_matrix_csv(std::ostream& out, const std::vector<std::string>& header, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(std::istream& in, std::vector<std::string>& header);

}  // namespace picarz
