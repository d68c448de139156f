#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace covsteer::cli {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kCsvSchemaVersion = 1;

/// RFC-4180 CSV with a leading `#` comment carrying the tool version, schema
/// version and config hash. Numbers are written with 17 significant digits.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& config_hash,
            const std::vector<std::string>& columns);

  void row(const std::vector<double>& values);
  /// Leading integer id followed by numeric fields.
  void row(long long id, const std::vector<double>& values);

 private:
  std::ofstream out_;
};

std::string format_number(double v);

/// Column labels `<prefix>_i_j` for the upper triangle (i ≤ j) of an n×n matrix.
std::vector<std::string> upper_triangle_labels(const std::string& prefix,
                                               Eigen::Index n);
std::vector<double> upper_triangle(const Eigen::MatrixXd& m);

/// Column labels `<prefix>_i_j` for all entries, row-major.
std::vector<std::string> matrix_labels(const std::string& prefix,
                                       Eigen::Index rows, Eigen::Index cols);
std::vector<double> row_major(const Eigen::MatrixXd& m);

}  // namespace covsteer::cli
