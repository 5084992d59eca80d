#include "comono/frontier.hpp"

#include <algorithm>

#include "comono/errors.hpp"
#include "comono/parallel.hpp"

namespace comono {

FrontierInfo cross_nn(const Workspace& ws, int threads) {
  const int n = ws.n();
  FrontierInfo fi;
  fi.nn_index.assign(n, -1);
  fi.nn_distance.resize(n);
  parallel_for(n, threads, [&](int i) {
    const GroupIndex& other = ws.group(1 - ws.ds.d[i]);
    double dist = 0.0;
    fi.nn_index[i] = other.tree.nearest(ws.xs.row(i).transpose(), &dist);
    fi.nn_distance[i] = dist;
  });
  return fi;
}

FrontierInfo set_weights(FrontierInfo fi, const Workspace& ws, double epsilon) {
  if (!(epsilon > 0.0)) fail(errc::invalid_argument, "epsilon must be positive");
  const int n = ws.n();
  fi.w.assign(n, 0);
  fi.epsilon = epsilon;
  std::array<int, 2> count = {0, 0};
  for (int i = 0; i < n; ++i) {
    if (fi.nn_distance[i] <= epsilon) {
      fi.w[i] = 1;
      ++count[ws.ds.d[i]];
    }
  }
  for (int d = 0; d < 2; ++d)
    if (count[d] == 0)
      fail(errc::no_frontier_units, "no group-" + std::to_string(d) +
                                        " units within epsilon = " + std::to_string(epsilon) +
                                        " of the opposite group");
  return fi;
}

std::array<int, 2> near_frontier_counts(const FrontierInfo& fi, const Workspace& ws) {
  std::array<int, 2> count = {0, 0};
  for (int i = 0; i < ws.n(); ++i)
    if (!fi.w.empty() && fi.w[i]) ++count[ws.ds.d[i]];
  return count;
}

std::pair<double, double> domain_endpoints(const std::vector<double>& fitted_values) {
  if (fitted_values.empty())
    fail(errc::empty_frontier_sample, "no fitted values to bound the curve domain");
  auto [lo, hi] = std::minmax_element(fitted_values.begin(), fitted_values.end());
  return {*lo, *hi};
}

}  // namespace comono
