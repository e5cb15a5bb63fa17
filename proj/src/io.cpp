#include "drem/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "drem/errors.hpp"

namespace dprem {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool in_field = false;
  const bool has_sep = line.find_first_of(",\t") != std::string::npos;
  for (char ch : line) {
    const bool sep = has_sep ? (ch == ',' || ch == '\t') : (ch == ' ');
    if (sep) {
      if (has_sep || in_field) out.push_back(cur);
      cur.clear();
      in_field = false;
    } else if (ch != '\r') {
      if (!(ch == ' ' && has_sep)) cur += ch;
      in_field = true;
    }
  }
  if (in_field || has_sep) out.push_back(cur);
  return out;
}

bool parse_number(const std::string& s, double& v) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    std::vector<double> vals(fields.size());
    bool numeric = true;
    for (std::size_t j = 0; j < fields.size(); ++j) numeric = numeric && parse_number(fields[j], vals[j]);
    if (!numeric) {
      if (rows.empty() && width == 0) {
        width = fields.size();  // header
        continue;
      }
      throw DataError(path + ": line " + std::to_string(line_no) + ": non-numeric field");
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      throw DataError(path + ": line " + std::to_string(line_no) + ": expected " + std::to_string(width) + " fields, found " +
                      std::to_string(fields.size()));
    }
    for (double v : vals) {
      if (!std::isfinite(v)) throw DataError(path + ": line " + std::to_string(line_no) + ": non-finite value");
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw DataError(path + ": no data rows");
  if (width < 2) throw DataError(path + ": need a response column and at least one covariate column");
  Dataset d;
  d.y.set_size(rows.size());
  d.X.set_size(rows.size(), width - 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    d.y[i] = rows[i][0];
    for (std::size_t j = 1; j < width; ++j) d.X(i, j - 1) = rows[i][j];
  }
  return d;
}

BinaryDataset read_binary_dataset(const std::string& path) {
  Dataset d = read_dataset(path);
  for (std::size_t i = 0; i < d.n(); ++i) {
    if (d.y[i] != 0.0 && d.y[i] != 1.0) {
      throw DataError(path + ": data row " + std::to_string(i + 1) + ": binary response must be 0 or 1");
    }
  }
  return BinaryDataset{std::move(d.y), std::move(d.X)};
}

void write_dataset(const std::string& path, const arma::vec& y, const arma::mat& X) {
  Table t;
  t.header.push_back("y");
  for (arma::uword j = 0; j < X.n_cols; ++j) t.header.push_back("x" + std::to_string(j + 1));
  for (arma::uword i = 0; i < y.n_elem; ++i) {
    std::vector<std::string> row{format_double(y[i])};
    for (arma::uword j = 0; j < X.n_cols; ++j) row.push_back(format_double(X(i, j)));
    t.add_row(std::move(row));
  }
  write_csv(path, t);
}

void check_table(const Table& t) {
  if (t.header.empty()) throw NumericalError("table has no header");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r].size() != t.header.size()) {
      throw NumericalError("table row " + std::to_string(r + 1) + " has " + std::to_string(t.rows[r].size()) +
                           " cells, header has " + std::to_string(t.header.size()));
    }
    for (const std::string& cell : t.rows[r]) {
      if (cell == "nan" || cell == "inf" || cell == "-inf") {
        throw NumericalError("table row " + std::to_string(r + 1) + " holds a non-finite value");
      }
    }
  }
}

void write_csv(const std::string& path, const Table& t) {
  check_table(t);
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  auto put = [&](const std::vector<std::string>& row) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      const bool quote = row[j].find(',') != std::string::npos;
      if (quote) {
        out << '"' << row[j] << '"';
      } else {
        out << row[j];
      }
    }
    out << '\n';
  };
  put(t.header);
  for (const auto& row : t.rows) put(row);
}

Table read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  Table t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (char ch : line) {
      if (ch == '"') {
        quoted = !quoted;
      } else if (ch == ',' && !quoted) {
        cells.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    cells.push_back(cur);
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  if (t.header.empty()) throw DataError("'" + path + "' is empty");
  return t;
}

Table archive_table(const SampleArchive& a) {
  Table t;
  const std::size_t p = a.records.empty() ? 0 : a.records.front().beta.n_elem;
  t.header = {"iteration", "k"};
  for (std::size_t j = 0; j < p; ++j) t.header.push_back("beta_" + std::to_string(j + 1));
  t.header.insert(t.header.end(), {"sigma2", "tau2", "sizes"});
  for (const SampleRecord& r : a.records) {
    std::vector<std::string> row{std::to_string(r.iteration), std::to_string(r.k)};
    for (double b : r.beta) row.push_back(format_double(b));
    row.push_back(format_double(r.sigma2));
    row.push_back(format_double(r.tau2));
    std::string sizes;
    for (std::size_t j = 0; j < r.sizes.size(); ++j) {
      if (j) sizes += ';';
      sizes += std::to_string(r.sizes[j]);
    }
    row.push_back(sizes);
    t.add_row(std::move(row));
  }
  return t;
}

void write_archive(const std::string& path, const SampleArchive& a) { write_csv(path, archive_table(a)); }

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("'" + path + "': " + e.what());
  }
}

}  // namespace dprem
