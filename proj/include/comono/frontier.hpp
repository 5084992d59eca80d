#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "comono/workspace.hpp"

namespace comono {

/// Cross-group nearest-neighbor structure. For every unit, the nearest unit
/// of the opposite treatment group, the distance to it, and (once a radius
/// is chosen) the binary near-frontier indicator. No analytic description of
/// the treatment boundary is ever used.
struct FrontierInfo {
  std::vector<int> nn_index;     // row of the nearest opposite-group unit
  Eigen::VectorXd nn_distance;
  std::vector<std::uint8_t> w;   // empty until set_weights
  double epsilon = 0.0;
};

/// Nearest opposite-group unit for every row. Distance ties resolve to the
/// lowest row id, so results are reproducible.
FrontierInfo cross_nn(const Workspace& ws, int threads = 1);

/// Marks units whose cross-group distance is at most epsilon and reports the
/// result. Throws NoFrontierUnits when either group ends up with no marked
/// units (the second stage would be impossible at this radius).
FrontierInfo set_weights(FrontierInfo fi, const Workspace& ws, double epsilon);

/// Near-frontier unit counts {untreated, treated} under the current weights.
std::array<int, 2> near_frontier_counts(const FrontierInfo& fi, const Workspace& ws);

/// (min, max) of fitted values at near-frontier units; the estimated domain
/// of the transfer curve. Throws EmptyFrontierSample on an empty input.
std::pair<double, double> domain_endpoints(const std::vector<double>& fitted_values);

}  // namespace comono
