#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace comono {

/// The (Y, D, X) sample. Treatment is binary and both groups must be
/// nonempty; the treated/untreated split is defined purely by the observed
/// D column, never by a treatment-rule formula.
struct Dataset {
  Eigen::VectorXd y;               // outcomes, length n
  Eigen::VectorXi d;               // treatment indicators in {0,1}, length n
  Eigen::MatrixXd x;               // covariates, n x k
  std::vector<std::string> names;  // covariate labels, length k

  int n() const { return static_cast<int>(y.size()); }
  int k() const { return static_cast<int>(x.cols()); }

  /// Validates lengths, finiteness, binary treatment, and that both groups
  /// are nonempty. Throws on violation.
  static Dataset make(Eigen::VectorXd y, Eigen::VectorXi d, Eigen::MatrixXd x,
                      std::vector<std::string> names);
};

/// Per-covariate affine transform z = (x - mean) / scale.
struct Standardization {
  Eigen::VectorXd means;
  Eigen::VectorXd scales;  // strictly positive

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  Eigen::VectorXd apply_point(const Eigen::VectorXd& x) const;
  Eigen::VectorXd invert_point(const Eigen::VectorXd& z) const;
};

/// Centers each covariate to mean 0 and rescales to standard deviation 1
/// (population convention, denominator n). Throws DegenerateCovariate for
/// constant columns.
std::pair<Dataset, Standardization> standardize(const Dataset& ds);

struct Partition {
  std::vector<int> untreated;  // rows with d = 0, ascending
  std::vector<int> treated;    // rows with d = 1, ascending

  const std::vector<int>& group(int d) const { return d == 1 ? treated : untreated; }
};

Partition partition(const Dataset& ds);

}  // namespace comono
