#include "comono/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "comono/errors.hpp"
#include "comono/parallel.hpp"
#include "comono/rng.hpp"

namespace comono {

Eigen::VectorXd exponential_multipliers(int n, std::uint64_t seed, std::uint64_t draw) {
  Rng rng = Rng::substream(seed, draw);
  Eigen::VectorXd m(n);
  for (int i = 0; i < n; ++i) m[i] = rng.exponential();
  return m;
}

double abs_deviation_quantile(std::vector<double> deviations, double level) {
  if (deviations.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(deviations.begin(), deviations.end());
  int m = static_cast<int>(deviations.size());
  int idx = static_cast<int>(std::ceil(level * m)) - 1;
  idx = std::clamp(idx, 0, m - 1);
  return deviations[idx];
}

Bands bootstrap_bands(int n_obs, const Eigen::VectorXd& base,
                      const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& estimator,
                      const BootstrapConfig& cfg) {
  if (cfg.draws < 2) fail(errc::invalid_argument, "need at least 2 bootstrap draws");
  if (!(cfg.level > 0.0 && cfg.level < 1.0))
    fail(errc::invalid_argument, "coverage level must be in (0,1)");

  const int m = static_cast<int>(base.size());
  Eigen::MatrixXd draws(cfg.draws, m);
  std::vector<std::uint8_t> kept(cfg.draws, 0);

  parallel_for(cfg.draws, cfg.threads, [&](int s) {
    Eigen::VectorXd mult = exponential_multipliers(n_obs, cfg.seed, static_cast<std::uint64_t>(s));
    Eigen::VectorXd est;
    try {
      est = estimator(mult);
    } catch (const Error&) {
      est = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::quiet_NaN());
    }
    if (est.size() != m) est = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::quiet_NaN());
    int failed = static_cast<int>(est.array().isNaN().count());
    kept[s] = failed <= cfg.max_point_failure * m ? 1 : 0;
    draws.row(s) = est;
  });

  Bands bands;
  for (int s = 0; s < cfg.draws; ++s)
    if (!kept[s]) ++bands.discarded_draws;
  if (bands.discarded_draws > cfg.max_discard * cfg.draws)
    fail(errc::bootstrap_aborted, std::to_string(bands.discarded_draws) + " of " +
                                      std::to_string(cfg.draws) + " draws discarded");

  bands.lower.resize(m);
  bands.upper.resize(m);
  std::vector<double> devs;
  devs.reserve(cfg.draws);
  for (int j = 0; j < m; ++j) {
    devs.clear();
    for (int s = 0; s < cfg.draws; ++s) {
      if (!kept[s]) continue;
      double v = draws(s, j);
      if (std::isfinite(v)) devs.push_back(std::abs(v - base[j]));
    }
    double half = abs_deviation_quantile(devs, cfg.level);
    bands.lower[j] = base[j] - half;
    bands.upper[j] = base[j] + half;
  }
  return bands;
}

ComonoDiagnostic comono_diagnostic(const std::vector<std::array<double, 2>>& pairs) {
  const int m = static_cast<int>(pairs.size());
  if (m < 2) fail(errc::too_few_points, "diagnostic needs at least 2 evaluation points");
  ComonoDiagnostic diag;
  diag.n_pairs = static_cast<long long>(m) * (m - 1) / 2;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      double prod = (pairs[i][0] - pairs[j][0]) * (pairs[i][1] - pairs[j][1]);
      if (prod < best) {
        best = prod;
        diag.first = i;
        diag.second = j;
      }
    }
  }
  diag.statistic = best;
  return diag;
}

std::vector<std::array<double, 2>> curve_value_pairs(const QCurve& curve,
                                                     bool inner_support_only) {
  std::vector<std::array<double, 2>> pairs;
  pairs.reserve(curve.grid.size());
  for (Eigen::Index i = 0; i < curve.grid.size(); ++i) {
    if (inner_support_only &&
        (curve.grid[i] < curve.support_low || curve.grid[i] > curve.support_high))
      continue;
    // grid carries the source group's conditional mean level, values the
    // opposing one; order the coordinates as (v0, v1).
    if (curve.target == 0)
      pairs.push_back({curve.values[i], curve.grid[i]});
    else
      pairs.push_back({curve.grid[i], curve.values[i]});
  }
  return pairs;
}

std::vector<std::array<double, 2>> unit_value_pairs(const Workspace& ws, const FrontierInfo& fi_in,
                                                    double epsilon, KernelSpec kernel,
                                                    std::array<double, 2> h_by_group,
                                                    int threads) {
  FrontierInfo fi = set_weights(fi_in, ws, epsilon);
  std::vector<int> rows;
  for (int i = 0; i < ws.n(); ++i)
    if (fi.w[i]) rows.push_back(i);

  const int m = static_cast<int>(rows.size());
  std::vector<std::array<double, 2>> vals(m);
  std::vector<std::uint8_t> ok(m);
  parallel_for(m, threads, [&](int j) {
    int i = rows[j];
    int d = ws.ds.d[i];
    auto own = try_fit_at(ws.xs, ws.ds.y, ws.group(d), ws.xs.row(i).transpose(), kernel,
                          h_by_group[d]);
    if (!own) {
      ok[j] = 0;
      return;
    }
    int nn = fi.nn_index[i];
    auto cross = try_fit_at(ws.xs, ws.ds.y, ws.group(1 - d), ws.xs.row(nn).transpose(), kernel,
                            h_by_group[1 - d]);
    if (!cross) {
      ok[j] = 0;
      return;
    }
    double cross_val = cross->value + cross->gradient.dot(ws.xs.row(i).transpose() -
                                                          ws.xs.row(nn).transpose());
    ok[j] = 1;
    if (d == 0)
      vals[j] = {own->value, cross_val};
    else
      vals[j] = {cross_val, own->value};
  });

  std::vector<std::array<double, 2>> pairs;
  pairs.reserve(m);
  for (int j = 0; j < m; ++j)
    if (ok[j]) pairs.push_back(vals[j]);
  return pairs;
}

}  // namespace comono
