#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "comono/extrapolate.hpp"
#include "comono/workspace.hpp"

namespace comono {

/// A counterfactual treatment rule: x (raw units) -> treatment probability.
/// The sample row is passed alongside x so rules can reference the factual
/// assignment (row is -1 for synthetic points).
struct PolicySpec {
  std::function<double(const Eigen::VectorXd& x_raw, int row)> prob;
  std::string description;

  static PolicySpec constant(double p);
  /// Treat (p = 1) iff coefs' x <= cutoff.
  static PolicySpec linear_threshold(Eigen::VectorXd coefs, double cutoff);
  /// Treat iff x[axis] <= cutoff (treat_below) or x[axis] >= cutoff.
  static PolicySpec axis_threshold(int axis, double cutoff, bool treat_below);
  /// The factual assignment itself: p = D.
  static PolicySpec factual(const Dataset& ds);
  /// Expansion of the factual assignment: keeps everyone treated and adds
  /// units passing the axis threshold. This is the rule swept when a cutoff
  /// is raised, so a cutoff that admits nobody changes nobody.
  static PolicySpec expand_axis_threshold(const Dataset& ds, int axis, double cutoff,
                                          bool treat_below);
};

/// Parses rule text against covariate names. Accepted forms:
///   "p=0.3"                       constant probability
///   "x1<=0.5", "x2>=1"            single-covariate threshold
///   "0.4*x1+x2<=0.7"              linear-combination threshold
///   "factual"                     p = D
/// Comparators <=, <, >=, > (strictness is ignored: rules are measure-zero
/// boundaries on continuous covariates).
PolicySpec parse_rule(const std::string& text, const Dataset& ds);

/// Per-unit indicator that both conditional mean potential outcomes are
/// identified: the unit's own-group fitted value lies inside the opposing
/// curve's domain (closed interval). Units whose own fit failed get 0.
std::vector<std::uint8_t> s_indicator(const Workspace& ws, const QCurvePair& curves,
                                      const Eigen::VectorXd& own_fit);

struct PolicyEffect {
  double theta = 0.0;            // mean causal impact on the identified subsample
  long long n_identified = 0;    // units with s = 1
  double n_affected = 0.0;       // expected treatment-status changes among s = 1
  double net_change_avg = 0.0;   // mean net change in treated count (cost proxy)
  double net_change_count = 0.0; // same, as a raw count
};

/// Plug-in policy effect over units with s = 1: newly treated units
/// contribute p(x) (q1(g0) - y), newly untreated contribute
/// (1 - p(x)) (q0(g1) - y). Throws NoIdentifiedUnits when s is all zero.
PolicyEffect policy_effect(const Workspace& ws, const PolicySpec& spec, const QCurvePair& curves,
                           const Eigen::VectorXd& own_fit, const std::vector<std::uint8_t>& s);

struct SweepRow {
  double cutoff = 0.0;
  bool ok = false;
  PolicyEffect effect;
  std::string error;
};

/// Policy effects for a sequence of single-covariate cutoff expansions.
/// Per-cutoff failures are recorded and the sweep continues.
std::vector<SweepRow> threshold_sweep(const Workspace& ws, int axis,
                                      const std::vector<double>& cutoffs, bool treat_below,
                                      const QCurvePair& curves, const Eigen::VectorXd& own_fit,
                                      const std::vector<std::uint8_t>& s);

}  // namespace comono
