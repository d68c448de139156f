#include "covsteer/cli/csv.hpp"

#include <cstdio>

#include "covsteer/cli/config.hpp"

namespace covsteer::cli {
namespace {

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path,
                     const std::string& config_hash,
                     const std::vector<std::string>& columns)
    : out_(path, std::ios::binary) {
  if (!out_) throw ConfigError("output: cannot write '" + path.string() + "'");
  out_ << "# covsteer " << kToolVersion << " schema=" << kCsvSchemaVersion
       << " config=" << config_hash << "\r\n";
  for (std::size_t i = 0; i < columns.size(); ++i) {
    out_ << (i ? "," : "") << quote(columns[i]);
  }
  out_ << "\r\n";
}

void CsvWriter::row(const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    out_ << (i ? "," : "") << format_number(values[i]);
  }
  out_ << "\r\n";
}

void CsvWriter::row(long long id, const std::vector<double>& values) {
  out_ << id;
  for (double v : values) out_ << "," << format_number(v);
  out_ << "\r\n";
}

std::vector<std::string> upper_triangle_labels(const std::string& prefix,
                                               Eigen::Index n) {
  std::vector<std::string> labels;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      labels.push_back(prefix + "_" + std::to_string(i) + "_" + std::to_string(j));
    }
  }
  return labels;
}

std::vector<double> upper_triangle(const Eigen::MatrixXd& m) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = i; j < m.cols(); ++j) out.push_back(m(i, j));
  }
  return out;
}

std::vector<std::string> matrix_labels(const std::string& prefix,
                                       Eigen::Index rows, Eigen::Index cols) {
  std::vector<std::string> labels;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      labels.push_back(prefix + "_" + std::to_string(i) + "_" + std::to_string(j));
    }
  }
  return labels;
}

std::vector<double> row_major(const Eigen::MatrixXd& m) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  }
  return out;
}

}  // namespace covsteer::cli
