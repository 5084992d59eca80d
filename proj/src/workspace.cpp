#include "comono/workspace.hpp"

namespace comono {

GroupIndex make_group_index(const Eigen::MatrixXd& x, std::vector<int> rows) {
  GroupIndex g;
  g.tree = KdTree(x, rows);
  std::sort(rows.begin(), rows.end());
  g.rows = std::move(rows);
  return g;
}

Workspace make_workspace(Dataset ds, bool standardize_covariates) {
  Workspace ws;
  if (standardize_covariates) {
    auto [std_ds, st] = standardize(ds);
    ws.xs = std::move(std_ds.x);
    ws.scaling = std::move(st);
  } else {
    ws.xs = ds.x;
  }
  ws.ds = std::move(ds);
  ws.part = partition(ws.ds);
  ws.group_index[0] = make_group_index(ws.xs, ws.part.untreated);
  ws.group_index[1] = make_group_index(ws.xs, ws.part.treated);
  return ws;
}

}  // namespace comono
