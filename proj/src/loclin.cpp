#include "comono/loclin.hpp"

#include <cmath>
#include <limits>

#include "comono/errors.hpp"
#include "comono/parallel.hpp"

namespace comono {

double rule_of_thumb_h(int n_group) {
  return 1.06 * std::pow(static_cast<double>(n_group), -1.0 / 6.0);
}

double rule_of_thumb_b(double sd, int n) {
  return 1.06 * sd * std::pow(static_cast<double>(n), -0.2);
}

namespace detail {

void WlsSystem::reset(int p) {
  a.setZero(p, p);
  c.setZero(p);
  effective_n = 0;
}

void WlsSystem::add(const Eigen::Ref<const Eigen::VectorXd>& z, double weight, double response) {
  if (!(weight > 0.0)) return;
  a.selfadjointView<Eigen::Lower>().rankUpdate(z, weight);
  c.noalias() += (weight * response) * z;
  ++effective_n;
}

std::optional<Eigen::VectorXd> solve_wls(const WlsSystem& sys, bool& ridged) {
  ridged = false;
  Eigen::MatrixXd a = sys.a.selfadjointView<Eigen::Lower>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  if (eig.info() != Eigen::Success) return std::nullopt;
  double lmax = eig.eigenvalues().maxCoeff();
  double lmin = eig.eigenvalues().minCoeff();
  if (!(lmax > 0.0)) return std::nullopt;
  if (lmin > 1e-12 * lmax) {
    return Eigen::VectorXd(
        eig.eigenvectors() *
        (eig.eigenvectors().transpose() * sys.c).cwiseQuotient(eig.eigenvalues()));
  }
  // Singular beyond the floor: ridge and flag rather than silently altering.
  double floor = 1e-10 * a.trace();
  if (!(floor > 0.0)) return std::nullopt;
  a.diagonal().array() += floor;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success) return std::nullopt;
  Eigen::VectorXd beta = ldlt.solve(sys.c);
  if (!beta.allFinite()) return std::nullopt;
  ridged = true;
  return beta;
}

}  // namespace detail

std::optional<LocalFit> try_fit_at(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                   const GroupIndex& group,
                                   const Eigen::Ref<const Eigen::VectorXd>& x0, KernelSpec kernel,
                                   double h, const Eigen::VectorXd* multipliers, int exclude_row) {
  if (!(h > 0.0)) fail(errc::invalid_argument, "bandwidth h must be positive");
  const int k = static_cast<int>(x.cols());

  thread_local std::vector<int> rows;
  group.tree.radius(x0, kernel_query_radius(kernel) * h, rows);

  detail::WlsSystem sys;
  sys.reset(k + 1);
  Eigen::VectorXd z(k + 1);
  z[0] = 1.0;
  for (int r : rows) {
    if (r == exclude_row) continue;
    z.tail(k) = x.row(r).transpose() - x0;
    double w = kernel_eval(kernel, std::sqrt(z.tail(k).squaredNorm()) / h);
    if (multipliers) w *= (*multipliers)[r];
    sys.add(z, w, y[r]);
  }
  if (sys.effective_n < k + 1) return std::nullopt;

  bool ridged = false;
  auto beta = detail::solve_wls(sys, ridged);
  if (!beta) return std::nullopt;

  LocalFit fit;
  fit.value = (*beta)[0];
  fit.gradient = beta->tail(k);
  fit.effective_n = sys.effective_n;
  fit.x0 = x0;
  fit.ridged = ridged;
  return fit;
}

LocalFit fit_at(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GroupIndex& group,
                const Eigen::Ref<const Eigen::VectorXd>& x0, KernelSpec kernel, double h,
                const Eigen::VectorXd* multipliers) {
  auto fit = try_fit_at(x, y, group, x0, kernel, h, multipliers);
  if (!fit)
    fail(errc::insufficient_support,
         "local fit needs at least " + std::to_string(x.cols() + 1) +
             " weighted observations and a nonsingular design; widen h or move the "
             "evaluation point");
  return *fit;
}

double cv_bandwidth(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GroupIndex& group,
                    KernelSpec kernel, const std::vector<double>& h_grid, int threads) {
  if (h_grid.empty()) fail(errc::invalid_argument, "empty bandwidth grid");
  for (double h : h_grid)
    if (!(h > 0.0)) fail(errc::invalid_argument, "bandwidth candidates must be positive");

  const int m = static_cast<int>(group.rows.size());
  std::vector<std::pair<double, double>> scored;  // (h, mean LOO squared error)
  std::vector<double> sq_err(m);
  std::vector<std::uint8_t> ok(m);
  for (double h : h_grid) {
    parallel_for(m, threads, [&](int i) {
      int row = group.rows[i];
      auto fit = try_fit_at(x, y, group, x.row(row).transpose(), kernel, h, nullptr, row);
      ok[i] = fit.has_value();
      sq_err[i] = fit ? (y[row] - fit->value) * (y[row] - fit->value) : 0.0;
    });
    int n_ok = 0;
    double sse = 0.0;
    for (int i = 0; i < m; ++i) {
      n_ok += ok[i];
      sse += sq_err[i];
    }
    if (m - n_ok > 0.05 * m || n_ok == 0) continue;
    scored.emplace_back(h, sse / n_ok);
  }
  if (scored.empty())
    fail(errc::all_candidates_failed,
         "every candidate bandwidth lacked support for more than 5% of points");

  double best = std::numeric_limits<double>::infinity();
  for (const auto& [h, score] : scored) best = std::min(best, score);
  // Scores within fp noise of the minimum count as ties; ties resolve toward
  // the larger bandwidth (stability).
  double window = best + 1e-9 * best + 1e-18;
  double choice = -1.0;
  for (const auto& [h, score] : scored)
    if (score <= window && h > choice) choice = h;
  return choice;
}

}  // namespace comono
