#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "drem/model_types.hpp"
#include "drem/samplers.hpp"

namespace dprem {

/// Reads y (first column) and X (remaining columns) from a comma, tab or space delimited file.
/// A non-numeric first row is taken as a header. Malformed rows raise DataError naming the line.
Dataset read_dataset(const std::string& path);
/// Same layout; y must be 0 or 1.
BinaryDataset read_binary_dataset(const std::string& path);
void write_dataset(const std::string& path, const arma::vec& y, const arma::mat& X);

/// A rectangular table with a mandatory header, checked before it is written.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row) { rows.push_back(std::move(row)); }
};
/// Throws NumericalError when a row has the wrong width or a numeric cell is not finite.
void check_table(const Table& t);
void write_csv(const std::string& path, const Table& t);
Table read_csv(const std::string& path);

/// iteration, k, beta_1..beta_p, sigma2, tau2, sizes (semicolon-joined).
Table archive_table(const SampleArchive& a);
void write_archive(const std::string& path, const SampleArchive& a);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

/// Shortest round-trippable decimal form.
std::string format_double(double x);

}  // namespace dprem
