#pragma once

#include <string>
#include <vector>

#include "comono/dataset.hpp"

namespace comono {

/// Column designation for loading a (Y, D, X) sample from CSV.
/// Empty x_cols means: every header column other than y_col/d_col.
struct ColumnSchema {
  std::string y_col = "y";
  std::string d_col = "d";
  std::vector<std::string> x_cols;
};

/// Strict CSV reader: header row required, UTF-8, '.' decimal point.
/// A missing designated column, a non-numeric or empty designated cell,
/// a non-binary treatment value, or a single-group sample is a hard error.
/// Row order is preserved.
Dataset load_csv(const std::string& path, const ColumnSchema& schema = {});

/// Writes y,d,<covariates...> with full round-trip precision.
void write_csv(const std::string& path, const Dataset& ds);

/// Shortest-exact decimal rendering used for all CSV output ("%.17g"
/// trimmed), so written files are deterministic and reload bit-identically.
std::string format_double(double v);

}  // namespace comono
