#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

namespace bdc {

/// Round-trip safe decimal rendering (17 significant digits, "nan"/"inf" spelled out).
std::string format_double(double x);

/// Minimal numeric CSV writer: header first, one row per call, no quoting.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  void row(const std::vector<double>& values);
  /// Mixed row where some cells are already formatted (e.g. integers).
  void row_cells(const std::vector<std::string>& cells);

  const std::filesystem::path& path() const { return path_; }
  std::size_t columns() const { return columns_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace bdc
