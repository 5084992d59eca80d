#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <vector>

#include "comono/dataset.hpp"
#include "comono/kdtree.hpp"

namespace comono {

/// One treatment group's rows plus a spatial index over them. Built once per
/// run; immutable and shareable across worker threads afterwards.
struct GroupIndex {
  std::vector<int> rows;  // global row ids, ascending
  KdTree tree;
};

GroupIndex make_group_index(const Eigen::MatrixXd& x, std::vector<int> rows);

/// Immutable estimation context: the sample, the covariate matrix actually
/// used for distances and local fits (standardized by default), and a
/// spatial index per treatment group.
struct Workspace {
  Dataset ds;           // raw covariates as loaded
  Eigen::MatrixXd xs;   // covariates in internal (distance) units
  std::optional<Standardization> scaling;  // set when xs is standardized
  Partition part;
  std::array<GroupIndex, 2> group_index;   // [0] untreated, [1] treated

  int n() const { return ds.n(); }
  int k() const { return ds.k(); }
  const GroupIndex& group(int d) const { return group_index[d == 1 ? 1 : 0]; }

  /// Maps a raw-unit covariate point into internal units.
  Eigen::VectorXd to_internal(const Eigen::VectorXd& x_raw) const {
    return scaling ? scaling->apply_point(x_raw) : x_raw;
  }
};

/// Distances mix covariate scales, so covariates are standardized before any
/// neighborhood work unless the caller opts out.
Workspace make_workspace(Dataset ds, bool standardize_covariates = true);

}  // namespace comono
