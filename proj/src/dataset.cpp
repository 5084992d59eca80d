#include "comono/dataset.hpp"

#include <cmath>

#include "comono/errors.hpp"

namespace comono {

Dataset Dataset::make(Eigen::VectorXd y, Eigen::VectorXi d, Eigen::MatrixXd x,
                      std::vector<std::string> names) {
  const auto n = y.size();
  if (d.size() != n || x.rows() != n)
    fail(errc::invalid_argument, "y, d, x must have the same number of rows");
  if (n == 0) fail(errc::invalid_argument, "empty dataset");
  if (x.cols() < 1) fail(errc::invalid_argument, "at least one covariate required");
  if (static_cast<Eigen::Index>(names.size()) != x.cols())
    fail(errc::invalid_argument, "covariate name count does not match x");
  if (!y.allFinite() || !x.allFinite())
    fail(errc::invalid_argument, "non-finite entry in y or x");

  int n1 = 0, n0 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (d[i] == 0)
      ++n0;
    else if (d[i] == 1)
      ++n1;
    else
      fail(errc::non_binary_treatment, "row " + std::to_string(i) + " has d = " + std::to_string(d[i]));
  }
  if (n0 == 0) fail(errc::empty_group, "no rows with d = 0");
  if (n1 == 0) fail(errc::empty_group, "no rows with d = 1");

  Dataset ds;
  ds.y = std::move(y);
  ds.d = std::move(d);
  ds.x = std::move(x);
  ds.names = std::move(names);
  return ds;
}

Eigen::MatrixXd Standardization::apply(const Eigen::MatrixXd& x) const {
  return (x.rowwise() - means.transpose()).array().rowwise() / scales.transpose().array();
}

Eigen::VectorXd Standardization::apply_point(const Eigen::VectorXd& x) const {
  return (x - means).cwiseQuotient(scales);
}

Eigen::VectorXd Standardization::invert_point(const Eigen::VectorXd& z) const {
  return z.cwiseProduct(scales) + means;
}

std::pair<Dataset, Standardization> standardize(const Dataset& ds) {
  const int n = ds.n(), k = ds.k();
  Standardization st;
  st.means = ds.x.colwise().mean();
  st.scales.resize(k);
  for (int j = 0; j < k; ++j) {
    double ss = (ds.x.col(j).array() - st.means[j]).square().sum() / static_cast<double>(n);
    double sd = std::sqrt(ss);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(st.means[j]))))
      fail(errc::degenerate_covariate,
           "covariate '" + ds.names[j] + "' (column " + std::to_string(j) + ") is constant");
    st.scales[j] = sd;
  }
  Dataset out = ds;
  out.x = st.apply(ds.x);
  return {std::move(out), std::move(st)};
}

Partition partition(const Dataset& ds) {
  Partition p;
  for (int i = 0; i < ds.n(); ++i) {
    (ds.d[i] == 1 ? p.treated : p.untreated).push_back(i);
  }
  return p;
}

}  // namespace comono
