#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "comono/kernels.hpp"
#include "comono/workspace.hpp"

namespace comono {

/// Value and slope of a kernel-weighted linear fit at a point.
struct LocalFit {
  double value = 0.0;
  Eigen::VectorXd gradient;  // slope coefficients, one per covariate
  int effective_n = 0;       // observations carrying positive weight
  Eigen::VectorXd x0;
  bool ridged = false;       // diagonal floor engaged to survive a collinear design
};

/// Resolved smoothing parameters. h and epsilon are in the same units as the
/// covariate matrix backing the group indexes; b is in outcome units.
struct Bandwidths {
  double h = 0.0;
  double b = 0.0;
  double epsilon = 0.0;
};

/// First-stage default: h = 1.06 * n_group^(-1/6).
double rule_of_thumb_h(int n_group);

/// Second-stage default when cross-validation is not wanted:
/// b = 1.06 * sd * n^(-1/5).
double rule_of_thumb_b(double sd, int n);

/// Local linear regression of y on x at x0, restricted to `group`, with
/// weights K(||x_i - x0|| / h), optionally rescaled per-row by `multipliers`
/// (bootstrap weights). Only rows within the kernel query radius are
/// enumerated, via the group's spatial index.
///
/// Throws InsufficientSupport when fewer than k+1 rows carry weight or the
/// normal equations are singular beyond the ridge floor.
LocalFit fit_at(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GroupIndex& group,
                const Eigen::Ref<const Eigen::VectorXd>& x0, KernelSpec kernel, double h,
                const Eigen::VectorXd* multipliers = nullptr);

/// As fit_at but reports failure as nullopt; `exclude_row` (a global row id)
/// is dropped from the fit, which is what leave-one-out validation needs.
std::optional<LocalFit> try_fit_at(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                   const GroupIndex& group,
                                   const Eigen::Ref<const Eigen::VectorXd>& x0, KernelSpec kernel,
                                   double h, const Eigen::VectorXd* multipliers = nullptr,
                                   int exclude_row = -1);

/// Leave-one-out bandwidth selection over `h_grid` for fits within `group`.
/// Candidates where more than 5% of points lack support are discarded; exact
/// score ties resolve toward the larger bandwidth. Throws AllCandidatesFailed
/// when nothing survives.
double cv_bandwidth(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GroupIndex& group,
                    KernelSpec kernel, const std::vector<double>& h_grid, int threads = 1);

namespace detail {

/// Kernel-weighted normal equations accumulated over listed rows.
/// Shared by the multivariate first stage and the univariate second stage.
struct WlsSystem {
  Eigen::MatrixXd a;  // symmetric, (p+1) x (p+1)
  Eigen::VectorXd c;
  int effective_n = 0;

  void reset(int p);
  void add(const Eigen::Ref<const Eigen::VectorXd>& z, double weight, double response);
};

/// Solves A beta = c with a relative-conditioning check; applies the fixed
/// 1e-10 * trace(A) diagonal floor only when the plain system is singular,
/// and reports that through `ridged`. Returns nullopt when even the ridged
/// system is unusable.
std::optional<Eigen::VectorXd> solve_wls(const WlsSystem& sys, bool& ridged);

}  // namespace detail

}  // namespace comono
