#include "comono/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "comono/errors.hpp"

namespace comono {

namespace {
constexpr int kBruteForceLimit = 256;
constexpr int kLeafSize = 16;
}  // namespace

KdTree::KdTree(const Eigen::MatrixXd& points, std::vector<int> rows) {
  if (rows.empty()) fail(errc::invalid_argument, "KdTree over empty row set");
  std::sort(rows.begin(), rows.end());
  ids_ = std::move(rows);
  pts_.resize(static_cast<Eigen::Index>(ids_.size()), points.cols());
  for (std::size_t i = 0; i < ids_.size(); ++i) pts_.row(static_cast<Eigen::Index>(i)) = points.row(ids_[i]);

  brute_ = size() < kBruteForceLimit;
  if (!brute_) {
    nodes_.reserve(2 * ids_.size() / kLeafSize + 8);
    root_ = build(0, size());
  }
}

int KdTree::build(int begin, int end) {
  int node_id = static_cast<int>(nodes_.size());
  nodes_.push_back({begin, end, -1, -1, 0, 0.0});
  if (end - begin <= kLeafSize) return node_id;

  // Split on the axis with the widest extent over this range.
  int axis = 0;
  double best_extent = -1.0;
  for (int a = 0; a < dim(); ++a) {
    auto col = pts_.col(a).segment(begin, end - begin);
    double extent = col.maxCoeff() - col.minCoeff();
    if (extent > best_extent) {
      best_extent = extent;
      axis = a;
    }
  }
  if (best_extent <= 0.0) return node_id;  // all points identical: keep as leaf

  int mid = begin + (end - begin) / 2;
  // Median split; comparator includes the row id so the permutation is
  // deterministic under coordinate ties.
  std::vector<int> perm(end - begin);
  std::iota(perm.begin(), perm.end(), begin);
  std::sort(perm.begin(), perm.end(), [&](int a, int b) {
    double va = pts_(a, axis), vb = pts_(b, axis);
    return va < vb || (va == vb && ids_[a] < ids_[b]);
  });
  Eigen::MatrixXd tmp_pts(end - begin, dim());
  std::vector<int> tmp_ids(end - begin);
  for (int i = 0; i < end - begin; ++i) {
    tmp_pts.row(i) = pts_.row(perm[i]);
    tmp_ids[i] = ids_[perm[i]];
  }
  pts_.middleRows(begin, end - begin) = tmp_pts;
  std::copy(tmp_ids.begin(), tmp_ids.end(), ids_.begin() + begin);

  nodes_[node_id].axis = axis;
  nodes_[node_id].split = pts_(mid, axis);
  int left = build(begin, mid);
  int right = build(mid, end);
  nodes_[node_id].left = left;
  nodes_[node_id].right = right;
  return node_id;
}

int KdTree::nearest(const Eigen::Ref<const Eigen::VectorXd>& q, double* dist) const {
  double best_d2 = std::numeric_limits<double>::infinity();
  int best_id = -1;
  if (brute_) {
    for (int i = 0; i < size(); ++i) {
      double d2 = (pts_.row(i).transpose() - q).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && ids_[i] < best_id)) {
        best_d2 = d2;
        best_id = ids_[i];
      }
    }
  } else {
    search_nearest(root_, q, best_d2, best_id);
  }
  if (dist) *dist = std::sqrt(best_d2);
  return best_id;
}

void KdTree::search_nearest(int node, const Eigen::Ref<const Eigen::VectorXd>& q, double& best_d2,
                            int& best_id) const {
  const Node& nd = nodes_[node];
  if (nd.left < 0) {
    for (int i = nd.begin; i < nd.end; ++i) {
      double d2 = (pts_.row(i).transpose() - q).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && ids_[i] < best_id)) {
        best_d2 = d2;
        best_id = ids_[i];
      }
    }
    return;
  }
  double delta = q[nd.axis] - nd.split;
  int near = delta < 0.0 ? nd.left : nd.right;
  int far = delta < 0.0 ? nd.right : nd.left;
  search_nearest(near, q, best_d2, best_id);
  // <= so that an equal-distance point with a lower id is still found.
  if (delta * delta <= best_d2) search_nearest(far, q, best_d2, best_id);
}

void KdTree::radius(const Eigen::Ref<const Eigen::VectorXd>& q, double r,
                    std::vector<int>& out) const {
  out.clear();
  if (r < 0.0) return;
  double r2 = r * r;
  if (brute_) {
    for (int i = 0; i < size(); ++i)
      if ((pts_.row(i).transpose() - q).squaredNorm() <= r2) out.push_back(ids_[i]);
    return;  // ids_ ascending already
  }
  search_radius(root_, q, r2, out);
  std::sort(out.begin(), out.end());
}

void KdTree::search_radius(int node, const Eigen::Ref<const Eigen::VectorXd>& q, double r2,
                           std::vector<int>& out) const {
  const Node& nd = nodes_[node];
  if (nd.left < 0) {
    for (int i = nd.begin; i < nd.end; ++i)
      if ((pts_.row(i).transpose() - q).squaredNorm() <= r2) out.push_back(ids_[i]);
    return;
  }
  double delta = q[nd.axis] - nd.split;
  int near = delta < 0.0 ? nd.left : nd.right;
  int far = delta < 0.0 ? nd.right : nd.left;
  search_radius(near, q, r2, out);
  if (delta * delta <= r2) search_radius(far, q, r2, out);
}

}  // namespace comono
