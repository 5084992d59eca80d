#pragma once

#include <Eigen/Dense>
#include <vector>

namespace comono {

/// Static kd-tree over a row subset of a point matrix. The tree owns a copy
/// of its points, so it stays valid independently of the source matrix and
/// is safe to share read-only across threads.
///
/// Query results are exact and deterministic: nearest() breaks distance ties
/// toward the lowest row id, radius() returns ids in ascending order. Small
/// inputs (< 256 points) use a plain linear scan.
class KdTree {
 public:
  KdTree() = default;
  KdTree(const Eigen::MatrixXd& points, std::vector<int> rows);

  int size() const { return static_cast<int>(ids_.size()); }
  int dim() const { return static_cast<int>(pts_.cols()); }

  /// Row id of the nearest stored point to q (lowest id on exact ties).
  int nearest(const Eigen::Ref<const Eigen::VectorXd>& q, double* dist = nullptr) const;

  /// Row ids within closed euclidean radius r of q, ascending.
  void radius(const Eigen::Ref<const Eigen::VectorXd>& q, double r, std::vector<int>& out) const;

 private:
  struct Node {
    int begin, end;    // range into pts_/ids_
    int left, right;   // children, -1 for leaf
    int axis;
    double split;
  };

  int build(int begin, int end);
  void search_nearest(int node, const Eigen::Ref<const Eigen::VectorXd>& q, double& best_d2,
                      int& best_id) const;
  void search_radius(int node, const Eigen::Ref<const Eigen::VectorXd>& q, double r2,
                     std::vector<int>& out) const;

  Eigen::MatrixXd pts_;    // stored points, one per row, permuted during build
  std::vector<int> ids_;   // source row ids aligned with pts_
  std::vector<Node> nodes_;
  int root_ = -1;
  bool brute_ = true;
};

}  // namespace comono
