#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "comono/frontier.hpp"
#include "comono/loclin.hpp"
#include "comono/workspace.hpp"

namespace comono {

/// Grid evaluation of the estimated transfer curve q that maps one group's
/// conditional mean level into the opposite potential outcome's conditional
/// mean. `target` names the potential outcome the values estimate.
struct QCurve {
  Eigen::VectorXd grid;    // strictly increasing, inside [y_low, y_high]
  Eigen::VectorXd values;
  double y_low = 0.0;
  double y_high = 0.0;
  int target = 0;
  std::optional<Eigen::VectorXd> lower, upper;  // pointwise bands, if computed

  // run diagnostics
  std::vector<double> dropped;   // grid points without second-stage support
  int n_regression = 0;          // near-frontier units feeding the regression
  int n_endpoint = 0;            // near-frontier units bounding the domain
  int dropped_first_stage = 0;   // regression units lost to a failed first stage
  int ridged_fits = 0;
  double source_h = 0.0;         // first-stage bandwidth behind this curve
  double b = 0.0;
  double epsilon = 0.0;
  KernelSpec kernel{};
  // Inner support band: 2.5%..97.5% quantiles of the generated regressor
  // over the regression sample. Outside it the curve rests on a handful of
  // observations; consumers that need stable values (the comonotonicity
  // diagnostic, say) should restrict to it.
  double support_low = 0.0;
  double support_high = 0.0;

  bool in_domain(double y) const { return y >= y_low && y <= y_high; }

  /// Linear interpolation on the evaluated grid. Queries outside the grid's
  /// valid span continue the boundary segment; callers gate on in_domain(),
  /// values are never clamped.
  double interpolate(double y) const;
};

/// The two directions together: q0 imputes untreated means for treated
/// units, q1 the reverse.
struct QCurvePair {
  QCurve q0, q1;
  const QCurve& for_target(int t) const { return t == 0 ? q0 : q1; }
};

struct QOptions {
  KernelSpec kernel{};
  Bandwidths bw{};       // h, b, epsilon all resolved and positive
  int grid_size = 100;
  bool rearrange = false;        // nondecreasing rearrangement of the curve
  bool smooth_response = false;  // regress own-group fitted values instead of raw outcomes
  double max_dropped_fraction = 0.20;
  int threads = 1;
};

/// Locally-extrapolated first-stage fit: local linear at the nearest group-d
/// unit, continued linearly to x along the fitted gradient. x is in internal
/// (distance) units and is expected to lie outside group d.
double gtilde(const Workspace& ws, int source_d, const Eigen::Ref<const Eigen::VectorXd>& x,
              KernelSpec kernel, double h, const Eigen::VectorXd* multipliers = nullptr);

/// Estimates q_{1-d}: evaluates the extrapolated group-d fit at every
/// near-frontier group-(1-d) unit, then runs a univariate local linear
/// regression of those units' outcomes on the generated regressor at each
/// grid point spanning the estimated domain. Domain endpoints come from
/// group-d near-frontier units' own fits.
QCurve estimate_q(const Workspace& ws, const FrontierInfo& fi, int direction_d,
                  const QOptions& opts, const Eigen::VectorXd* multipliers = nullptr);

/// As estimate_q but evaluated at caller-chosen levels. Points without
/// support are dropped and recorded; the run fails only if more than
/// max_dropped_fraction of the grid drops.
QCurve estimate_q_at(const Workspace& ws, const FrontierInfo& fi, int direction_d,
                     const QOptions& opts, const Eigen::VectorXd& ygrid,
                     const Eigen::VectorXd* multipliers = nullptr);

/// Stratified variant: regresses outcomes on the generated regressor and the
/// stratum covariates jointly, with the combined-distance kernel
/// K((|gtilde_i - y| + ||x2_i - x2||) / b). One curve per row of
/// `stratum_points` (columns = strata_cols, raw units). Per-point support
/// failures are recorded on each curve, never silenced.
std::vector<QCurve> estimate_q_conditional(const Workspace& ws, const FrontierInfo& fi,
                                           int direction_d, const std::vector<int>& strata_cols,
                                           const QOptions& opts,
                                           const Eigen::MatrixXd& stratum_points,
                                           const Eigen::VectorXd* multipliers = nullptr);

/// Leave-one-out selection of the second-stage bandwidth over the
/// near-frontier sample. Same discard and tie rules as cv_bandwidth.
double cv_bandwidth_b(const Workspace& ws, const FrontierInfo& fi, int direction_d,
                      const QOptions& opts, const std::vector<double>& b_grid);

/// Imputed treatment effect at a point.
struct CateEstimate {
  Eigen::VectorXd x0;      // raw units
  int region = 0;          // treatment status of x0's region
  bool s = false;          // inside the opposing curve's domain
  std::optional<double> tau;
  std::optional<double> ey1, ey0;
};

/// CATE imputation at x0 (raw units) lying in region d0: the own-group fit
/// gives the factual mean; the opposing curve transfers it when the value
/// falls inside the curve's domain, otherwise s = 0 and nothing is imputed.
CateEstimate cate_at(const Workspace& ws, const QCurvePair& curves,
                     const Eigen::VectorXd& x0_raw, int d0);

/// Own-group fitted value for every unit (NaN where the fit lacks support).
/// h_by_group holds the first-stage bandwidth for each treatment group.
Eigen::VectorXd own_group_fits(const Workspace& ws, KernelSpec kernel,
                               std::array<double, 2> h_by_group,
                               const Eigen::VectorXd* multipliers = nullptr, int threads = 1,
                               int* n_failed = nullptr);

}  // namespace comono
