#include "comono/csv.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "comono/errors.hpp"

namespace comono {

namespace {

// Splits one CSV record. Double quotes delimit fields; "" inside a quoted
// field is a literal quote. Trailing \r is stripped.
std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& raw, int row, const std::string& col) {
  std::string s = trim(raw);
  if (s.empty())
    fail(errc::non_numeric_cell,
         "empty cell at row " + std::to_string(row) + ", column '" + col + "'");
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v))
    fail(errc::non_numeric_cell,
         "cannot parse '" + s + "' at row " + std::to_string(row) + ", column '" + col + "'");
  return v;
}

}  // namespace

Dataset load_csv(const std::string& path, const ColumnSchema& schema) {
  std::ifstream in(path);
  if (!in) fail(errc::io_error, "cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) fail(errc::io_error, "'" + path + "' is empty");
  std::vector<std::string> header = split_record(line);
  for (auto& h : header) h = trim(h);

  auto find_col = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      fail(errc::missing_column, "column '" + name + "' not found in '" + path + "'");
    return static_cast<int>(it - header.begin());
  };

  int yc = find_col(schema.y_col);
  int dc = find_col(schema.d_col);
  std::vector<std::string> xnames = schema.x_cols;
  if (xnames.empty()) {
    for (const auto& h : header)
      if (h != schema.y_col && h != schema.d_col) xnames.push_back(h);
    if (xnames.empty()) fail(errc::missing_column, "no covariate columns in '" + path + "'");
  }
  std::vector<int> xc;
  xc.reserve(xnames.size());
  for (const auto& name : xnames) xc.push_back(find_col(name));

  std::vector<double> ys, xs;
  std::vector<int> dsv;
  int row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto cells = split_record(line);
    if (cells.size() != header.size())
      fail(errc::non_numeric_cell, "row " + std::to_string(row) + " has " +
                                       std::to_string(cells.size()) + " cells, expected " +
                                       std::to_string(header.size()));
    ys.push_back(parse_cell(cells[yc], row, schema.y_col));
    double dv = parse_cell(cells[dc], row, schema.d_col);
    if (dv != 0.0 && dv != 1.0)
      fail(errc::non_binary_treatment,
           "row " + std::to_string(row) + " has d = " + trim(cells[dc]));
    dsv.push_back(static_cast<int>(dv));
    for (std::size_t j = 0; j < xc.size(); ++j)
      xs.push_back(parse_cell(cells[xc[j]], row, xnames[j]));
    ++row;
  }
  if (row == 0) fail(errc::io_error, "'" + path + "' has no data rows");

  Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(ys.data(), row);
  Eigen::VectorXi d = Eigen::Map<Eigen::VectorXi>(dsv.data(), row);
  Eigen::MatrixXd x(row, static_cast<int>(xc.size()));
  for (int i = 0; i < row; ++i)
    for (std::size_t j = 0; j < xc.size(); ++j) x(i, static_cast<int>(j)) = xs[i * xc.size() + j];

  return Dataset::make(std::move(y), std::move(d), std::move(x), std::move(xnames));
}

std::string format_double(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;
}

void write_csv(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) fail(errc::io_error, "cannot write '" + path + "'");
  out << "y,d";
  for (const auto& name : ds.names) out << ',' << name;
  out << '\n';
  for (int i = 0; i < ds.n(); ++i) {
    out << format_double(ds.y[i]) << ',' << ds.d[i];
    for (int j = 0; j < ds.k(); ++j) out << ',' << format_double(ds.x(i, j));
    out << '\n';
  }
  if (!out) fail(errc::io_error, "write failed for '" + path + "'");
}

}  // namespace comono
