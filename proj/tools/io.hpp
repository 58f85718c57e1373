#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace tpbn::cli {

using Json = nlohmann::ordered_json;

/// Numeric table read from CSV. Column names are empty unless a header was requested.
struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

CsvTable read_csv(const std::filesystem::path& path, bool has_header);

/// Writes `values` with an optional header; numbers use 17 significant digits.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values);

/// Stable JSON text: insertion-ordered keys, two-space indent, 17 significant
/// digits for floating point, null for non-finite values.
std::string dump_json(const Json& value);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

std::string format_double(double x);

Json to_json(const Eigen::VectorXd& v);

}  // namespace tpbn::cli
