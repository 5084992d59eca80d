#pragma once

#include <Eigen/Dense>

namespace comono {

/// Nondecreasing rearrangement by pool-adjacent-violators (unit weights,
/// least squares). Leaves already-monotone input unchanged.
Eigen::VectorXd isotonic_rearrange(const Eigen::VectorXd& values);

}  // namespace comono
