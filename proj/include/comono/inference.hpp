#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "comono/extrapolate.hpp"
#include "comono/frontier.hpp"
#include "comono/workspace.hpp"

namespace comono {

struct BootstrapConfig {
  int draws = 100;
  double level = 0.90;
  std::uint64_t seed = 0;
  double max_point_failure = 0.20;  // draws failing on more of the grid are discarded
  double max_discard = 0.25;        // more discarded draws than this aborts
  int threads = 1;
};

struct Bands {
  Eigen::VectorXd lower, upper;
  int discarded_draws = 0;
};

/// One unit-mean exponential weight per observation; the substream is
/// derived from (seed, draw) so draws are independent of scheduling order.
Eigen::VectorXd exponential_multipliers(int n, std::uint64_t seed, std::uint64_t draw);

/// Level-quantile of absolute deviations: the ceil(level*m)-th order
/// statistic. With 100 draws at level 0.90 this is the 90th of the sorted
/// absolute deviations.
double abs_deviation_quantile(std::vector<double> deviations, double level);

/// Pointwise multiplier-bootstrap bands around `base`. The estimator closure
/// receives one multiplier per observation (reused in every kernel sum of
/// both stages within the draw) and returns the grid evaluation, NaN at
/// points it could not estimate. Deterministic given the seed.
Bands bootstrap_bands(int n_obs, const Eigen::VectorXd& base,
                      const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& estimator,
                      const BootstrapConfig& cfg);

struct ComonoDiagnostic {
  double statistic = 0.0;   // min over pairs of (dv0)(dv1)
  int first = -1, second = -1;  // pair attaining it (indices into the input)
  long long n_pairs = 0;
};

/// Minimum pairwise product of coordinate differences over (v0, v1) pairs.
/// Nonnegative values are consistent with comonotone conditional means; a
/// strictly negative value flags the violating pair. Exhaustive O(m^2); no
/// p-value is attached.
ComonoDiagnostic comono_diagnostic(const std::vector<std::array<double, 2>>& pairs);

/// Diagnostic input from an estimated transfer curve: grid levels paired
/// with curve values, i.e. the two groups' conditional means matched through
/// the frontier. This is the default diagnostic source. With
/// inner_support_only the pairs are restricted to the curve's inner support
/// band, dropping tail grid points that rest on a handful of observations.
std::vector<std::array<double, 2>> curve_value_pairs(const QCurve& curve,
                                                     bool inner_support_only = false);

/// Diagnostic input from near-frontier units directly: each unit contributes
/// (own-group fit, extrapolated cross-group fit) ordered as (v0, v1).
/// Noisier than the curve source since the two coordinates are estimated
/// from disjoint samples; its minimum is biased downward in finite samples.
std::vector<std::array<double, 2>> unit_value_pairs(const Workspace& ws, const FrontierInfo& fi,
                                                    double epsilon, KernelSpec kernel,
                                                    std::array<double, 2> h_by_group,
                                                    int threads = 1);

}  // namespace comono
