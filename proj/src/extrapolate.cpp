#include "comono/extrapolate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "comono/errors.hpp"
#include "comono/isotonic.hpp"
#include "comono/parallel.hpp"

namespace comono {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Second-stage sample: near-frontier units of group 1-d with their generated
// regressor values, plus the endpoint values from group d.
struct SecondStage {
  std::vector<int> rows;        // regression rows (group 1-d, near frontier)
  Eigen::VectorXd g;            // generated regressor per regression row
  Eigen::VectorXd response;     // outcome (or smoothed response) per row
  double y_low = 0.0, y_high = 0.0;
  double support_low = 0.0, support_high = 0.0;
  int n_endpoint = 0;
  int dropped_first_stage = 0;
  int ridged = 0;
};

SecondStage first_stage(const Workspace& ws, const FrontierInfo& fi, int d, const QOptions& opts,
                        const Eigen::VectorXd* multipliers) {
  SecondStage st;
  const GroupIndex& source = ws.group(d);

  std::vector<int> reg_rows, end_rows;
  for (int i = 0; i < ws.n(); ++i) {
    if (!fi.w[i]) continue;
    (ws.ds.d[i] == d ? end_rows : reg_rows).push_back(i);
  }
  if (reg_rows.empty() || end_rows.empty())
    fail(errc::no_frontier_units, "a group has no near-frontier units at this epsilon");

  // Extrapolated fit at each regression unit: fit at its nearest group-d
  // neighbor, continued along the fitted gradient.
  const int m = static_cast<int>(reg_rows.size());
  Eigen::VectorXd gvals(m), resp(m);
  std::vector<std::uint8_t> ok(m);
  std::vector<std::uint8_t> ridged(m);
  parallel_for(m, opts.threads, [&](int j) {
    int i = reg_rows[j];
    int nn = fi.nn_index[i];
    auto fit = try_fit_at(ws.xs, ws.ds.y, source, ws.xs.row(nn).transpose(), opts.kernel,
                          opts.bw.h, multipliers);
    if (!fit) {
      ok[j] = 0;
      gvals[j] = kNaN;
      resp[j] = kNaN;
      ridged[j] = 0;
      return;
    }
    ok[j] = 1;
    ridged[j] = fit->ridged;
    gvals[j] = fit->value + fit->gradient.dot(ws.xs.row(i).transpose() - ws.xs.row(nn).transpose());
    if (opts.smooth_response) {
      auto own = try_fit_at(ws.xs, ws.ds.y, ws.group(1 - d), ws.xs.row(i).transpose(), opts.kernel,
                            opts.bw.h, multipliers);
      if (!own) {
        ok[j] = 0;
        return;
      }
      resp[j] = own->value;
    } else {
      resp[j] = ws.ds.y[i];
    }
  });
  for (int j = 0; j < m; ++j) {
    if (!ok[j]) {
      ++st.dropped_first_stage;
      continue;
    }
    st.rows.push_back(reg_rows[j]);
    st.ridged += ridged[j];
  }
  if (st.rows.empty())
    fail(errc::no_frontier_units, "first stage failed at every near-frontier unit");
  st.g.resize(st.rows.size());
  st.response.resize(st.rows.size());
  int pos = 0;
  for (int j = 0; j < m; ++j) {
    if (!ok[j]) continue;
    st.g[pos] = gvals[j];
    st.response[pos] = resp[j];
    ++pos;
  }

  {
    std::vector<double> sorted(st.g.data(), st.g.data() + st.g.size());
    std::sort(sorted.begin(), sorted.end());
    auto rank = [&](double q) {
      return sorted[static_cast<std::size_t>(q * (sorted.size() - 1))];
    };
    st.support_low = rank(0.025);
    st.support_high = rank(0.975);
  }

  // Domain endpoints: own-group fits at group-d near-frontier units. For a
  // unit of group d the extrapolation step is zero, so this is the same
  // estimator evaluated at its own covariates.
  const int me = static_cast<int>(end_rows.size());
  Eigen::VectorXd evals(me);
  std::vector<std::uint8_t> eok(me), eridged(me);
  parallel_for(me, opts.threads, [&](int j) {
    int i = end_rows[j];
    auto fit = try_fit_at(ws.xs, ws.ds.y, source, ws.xs.row(i).transpose(), opts.kernel,
                          opts.bw.h, multipliers);
    eok[j] = fit.has_value();
    eridged[j] = fit && fit->ridged;
    evals[j] = fit ? fit->value : kNaN;
  });
  std::vector<double> endpoint_values;
  endpoint_values.reserve(me);
  for (int j = 0; j < me; ++j) {
    st.ridged += eridged[j];
    if (eok[j]) endpoint_values.push_back(evals[j]);
  }
  auto [lo, hi] = domain_endpoints(endpoint_values);
  st.y_low = lo;
  st.y_high = hi;
  st.n_endpoint = static_cast<int>(endpoint_values.size());
  return st;
}

// Univariate local linear regression of response on (g - y) at one level y.
std::optional<double> second_stage_at(const SecondStage& st, const QOptions& opts, double y,
                                      const Eigen::VectorXd* multipliers, int exclude_row,
                                      int* ridged_count) {
  detail::WlsSystem sys;
  sys.reset(2);
  Eigen::Vector2d z;
  z[0] = 1.0;
  const int m = static_cast<int>(st.rows.size());
  for (int j = 0; j < m; ++j) {
    int row = st.rows[j];
    if (row == exclude_row) continue;
    double u = std::abs(st.g[j] - y) / opts.bw.b;
    double w = kernel_eval(opts.kernel, u);
    if (multipliers) w *= (*multipliers)[row];
    z[1] = st.g[j] - y;
    sys.add(z, w, st.response[j]);
  }
  if (sys.effective_n < 2) return std::nullopt;
  bool ridged = false;
  auto beta = detail::solve_wls(sys, ridged);
  if (!beta) return std::nullopt;
  if (ridged && ridged_count) ++(*ridged_count);
  return (*beta)[0];
}

QCurve run_q(const Workspace& ws, const FrontierInfo& fi_in, int d, const QOptions& opts,
             const Eigen::VectorXd* grid_override, const Eigen::VectorXd* multipliers) {
  if (d != 0 && d != 1) fail(errc::invalid_argument, "direction must be 0 or 1");
  if (!(opts.bw.h > 0.0) || !(opts.bw.b > 0.0) || !(opts.bw.epsilon > 0.0))
    fail(errc::invalid_argument, "h, b, epsilon must all be resolved and positive");

  FrontierInfo fi = set_weights(fi_in, ws, opts.bw.epsilon);
  SecondStage st = first_stage(ws, fi, d, opts, multipliers);

  Eigen::VectorXd grid;
  if (grid_override) {
    grid = *grid_override;  // empty allowed: domain/support probe only
  } else {
    int m = std::max(1, opts.grid_size);
    grid.resize(m);
    if (m == 1)
      grid[0] = 0.5 * (st.y_low + st.y_high);
    else
      for (int i = 0; i < m; ++i)
        grid[i] = st.y_low + (st.y_high - st.y_low) * i / static_cast<double>(m - 1);
  }

  QCurve q;
  q.target = 1 - d;
  q.y_low = st.y_low;
  q.y_high = st.y_high;
  q.n_regression = static_cast<int>(st.rows.size());
  q.n_endpoint = st.n_endpoint;
  q.dropped_first_stage = st.dropped_first_stage;
  q.source_h = opts.bw.h;
  q.b = opts.bw.b;
  q.epsilon = opts.bw.epsilon;
  q.kernel = opts.kernel;
  q.support_low = st.support_low;
  q.support_high = st.support_high;

  const int m = static_cast<int>(grid.size());
  Eigen::VectorXd vals(m);
  std::vector<int> ridged_per_point(m, 0);
  parallel_for(m, opts.threads, [&](int i) {
    auto v = second_stage_at(st, opts, grid[i], multipliers, -1, &ridged_per_point[i]);
    vals[i] = v ? *v : kNaN;
  });

  std::vector<double> kept_y, kept_v;
  kept_y.reserve(m);
  kept_v.reserve(m);
  for (int i = 0; i < m; ++i) {
    q.ridged_fits += ridged_per_point[i];
    if (std::isfinite(vals[i])) {
      kept_y.push_back(grid[i]);
      kept_v.push_back(vals[i]);
    } else {
      q.dropped.push_back(grid[i]);
    }
  }
  q.ridged_fits += st.ridged;
  if (static_cast<double>(q.dropped.size()) > opts.max_dropped_fraction * m)
    fail(errc::insufficient_support,
         std::to_string(q.dropped.size()) + " of " + std::to_string(m) +
             " grid points lacked second-stage support");
  if (kept_y.empty() && m > 0)
    fail(errc::insufficient_support, "no grid point had second-stage support");

  q.grid = Eigen::Map<Eigen::VectorXd>(kept_y.data(), static_cast<Eigen::Index>(kept_y.size()));
  q.values = Eigen::Map<Eigen::VectorXd>(kept_v.data(), static_cast<Eigen::Index>(kept_v.size()));
  if (opts.rearrange) q.values = isotonic_rearrange(q.values);
  return q;
}

}  // namespace

double QCurve::interpolate(double y) const {
  const int m = static_cast<int>(grid.size());
  if (m == 1) return values[0];
  // Locate the segment; boundary segments extend linearly.
  int hi = static_cast<int>(std::lower_bound(grid.data(), grid.data() + m, y) - grid.data());
  hi = std::clamp(hi, 1, m - 1);
  int lo = hi - 1;
  double t = (y - grid[lo]) / (grid[hi] - grid[lo]);
  return values[lo] + t * (values[hi] - values[lo]);
}

double gtilde(const Workspace& ws, int source_d, const Eigen::Ref<const Eigen::VectorXd>& x,
              KernelSpec kernel, double h, const Eigen::VectorXd* multipliers) {
  const GroupIndex& source = ws.group(source_d);
  int nn = source.tree.nearest(x);
  LocalFit fit = fit_at(ws.xs, ws.ds.y, source, ws.xs.row(nn).transpose(), kernel, h, multipliers);
  return fit.value + fit.gradient.dot(x - ws.xs.row(nn).transpose());
}

QCurve estimate_q(const Workspace& ws, const FrontierInfo& fi, int direction_d,
                  const QOptions& opts, const Eigen::VectorXd* multipliers) {
  return run_q(ws, fi, direction_d, opts, nullptr, multipliers);
}

QCurve estimate_q_at(const Workspace& ws, const FrontierInfo& fi, int direction_d,
                     const QOptions& opts, const Eigen::VectorXd& ygrid,
                     const Eigen::VectorXd* multipliers) {
  return run_q(ws, fi, direction_d, opts, &ygrid, multipliers);
}

double cv_bandwidth_b(const Workspace& ws, const FrontierInfo& fi, int direction_d,
                      const QOptions& opts, const std::vector<double>& b_grid_in) {
  for (double b : b_grid_in)
    if (!(b > 0.0)) fail(errc::invalid_argument, "bandwidth candidates must be positive");

  FrontierInfo fi_w = set_weights(fi, ws, opts.bw.epsilon);
  SecondStage st = first_stage(ws, fi_w, direction_d, opts, nullptr);

  // Default candidates: 12 log-spaced bandwidths between 1/50 and 1/2 of the
  // estimated domain width.
  std::vector<double> b_grid = b_grid_in;
  if (b_grid.empty()) {
    double width = st.y_high - st.y_low;
    if (!(width > 0.0)) width = std::max(1.0, std::abs(st.y_low)) * 0.1;
    double lo = std::log(width / 50.0), hi = std::log(width / 2.0);
    for (int i = 0; i < 12; ++i) b_grid.push_back(std::exp(lo + (hi - lo) * i / 11.0));
  }

  const int m = static_cast<int>(st.rows.size());
  std::vector<std::pair<double, double>> scored;
  std::vector<double> sq_err(m);
  std::vector<std::uint8_t> ok(m);
  for (double b : b_grid) {
    QOptions o = opts;
    o.bw.b = b;
    parallel_for(m, opts.threads, [&](int j) {
      auto v = second_stage_at(st, o, st.g[j], nullptr, st.rows[j], nullptr);
      ok[j] = v.has_value();
      sq_err[j] = v ? (st.response[j] - *v) * (st.response[j] - *v) : 0.0;
    });
    int n_ok = 0;
    double sse = 0.0;
    for (int j = 0; j < m; ++j) {
      n_ok += ok[j];
      sse += sq_err[j];
    }
    if (m - n_ok > 0.05 * m || n_ok == 0) continue;
    scored.emplace_back(b, sse / n_ok);
  }
  if (scored.empty())
    fail(errc::all_candidates_failed,
         "every candidate second-stage bandwidth lacked support for more than 5% of points");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [b, score] : scored) best = std::min(best, score);
  double window = best + 1e-9 * best + 1e-18;
  double choice = -1.0;
  for (const auto& [b, score] : scored)
    if (score <= window && b > choice) choice = b;
  return choice;
}

std::vector<QCurve> estimate_q_conditional(const Workspace& ws, const FrontierInfo& fi_in,
                                           int direction_d, const std::vector<int>& strata_cols,
                                           const QOptions& opts,
                                           const Eigen::MatrixXd& stratum_points,
                                           const Eigen::VectorXd* multipliers) {
  const int k = ws.k();
  const int p2 = static_cast<int>(strata_cols.size());
  if (p2 == 0 || p2 >= k)
    fail(errc::invalid_argument, "strata columns must be a proper nonempty covariate subset");
  for (int c : strata_cols)
    if (c < 0 || c >= k) fail(errc::invalid_argument, "strata column out of range");
  if (stratum_points.cols() != p2)
    fail(errc::invalid_argument, "stratum points must have one column per stratum covariate");

  FrontierInfo fi = set_weights(fi_in, ws, opts.bw.epsilon);
  SecondStage st = first_stage(ws, fi, direction_d, opts, multipliers);

  // Stratum covariates in internal units, aligned with the regression rows.
  const int m = static_cast<int>(st.rows.size());
  Eigen::MatrixXd x2(m, p2);
  for (int j = 0; j < m; ++j)
    for (int c = 0; c < p2; ++c) x2(j, c) = ws.xs(st.rows[j], strata_cols[c]);

  std::vector<QCurve> out;
  out.reserve(stratum_points.rows());
  for (Eigen::Index srow = 0; srow < stratum_points.rows(); ++srow) {
    Eigen::VectorXd point_raw = stratum_points.row(srow).transpose();
    Eigen::VectorXd point(p2);
    for (int c = 0; c < p2; ++c) {
      point[c] = ws.scaling ? (point_raw[c] - ws.scaling->means[strata_cols[c]]) /
                                  ws.scaling->scales[strata_cols[c]]
                            : point_raw[c];
    }

    int gm = std::max(1, opts.grid_size);
    Eigen::VectorXd grid(gm);
    if (gm == 1)
      grid[0] = 0.5 * (st.y_low + st.y_high);
    else
      for (int i = 0; i < gm; ++i)
        grid[i] = st.y_low + (st.y_high - st.y_low) * i / static_cast<double>(gm - 1);

    QCurve q;
    q.target = 1 - direction_d;
    q.y_low = st.y_low;
    q.y_high = st.y_high;
    q.n_regression = m;
    q.n_endpoint = st.n_endpoint;
    q.dropped_first_stage = st.dropped_first_stage;
    q.source_h = opts.bw.h;
    q.b = opts.bw.b;
    q.epsilon = opts.bw.epsilon;
    q.kernel = opts.kernel;
    q.support_low = st.support_low;
    q.support_high = st.support_high;

    Eigen::VectorXd vals(gm);
    parallel_for(gm, opts.threads, [&](int gi) {
      double y = grid[gi];
      detail::WlsSystem sys;
      sys.reset(2 + p2);
      Eigen::VectorXd z(2 + p2);
      z[0] = 1.0;
      for (int j = 0; j < m; ++j) {
        Eigen::VectorXd dx2 = x2.row(j).transpose() - point;
        double u = (std::abs(st.g[j] - y) + dx2.norm()) / opts.bw.b;
        double w = kernel_eval(opts.kernel, u);
        if (multipliers) w *= (*multipliers)[st.rows[j]];
        z[1] = st.g[j] - y;
        z.tail(p2) = dx2;
        sys.add(z, w, st.response[j]);
      }
      if (sys.effective_n < 2 + p2) {
        vals[gi] = kNaN;
        return;
      }
      bool ridged = false;
      auto beta = detail::solve_wls(sys, ridged);
      vals[gi] = beta ? (*beta)[0] : kNaN;
    });

    std::vector<double> kept_y, kept_v;
    for (int i = 0; i < gm; ++i) {
      if (std::isfinite(vals[i])) {
        kept_y.push_back(grid[i]);
        kept_v.push_back(vals[i]);
      } else {
        q.dropped.push_back(grid[i]);
      }
    }
    q.grid = Eigen::Map<Eigen::VectorXd>(kept_y.data(), static_cast<Eigen::Index>(kept_y.size()));
    q.values = Eigen::Map<Eigen::VectorXd>(kept_v.data(), static_cast<Eigen::Index>(kept_v.size()));
    if (opts.rearrange && q.values.size() > 0) q.values = isotonic_rearrange(q.values);
    out.push_back(std::move(q));
  }
  return out;
}

CateEstimate cate_at(const Workspace& ws, const QCurvePair& curves, const Eigen::VectorXd& x0_raw,
                     int d0) {
  if (d0 != 0 && d0 != 1) fail(errc::invalid_argument, "region must be 0 or 1");
  const QCurve& opposing = curves.for_target(1 - d0);

  CateEstimate est;
  est.x0 = x0_raw;
  est.region = d0;

  Eigen::VectorXd x0 = ws.to_internal(x0_raw);
  LocalFit own = fit_at(ws.xs, ws.ds.y, ws.group(d0), x0, opposing.kernel, opposing.source_h);

  if (d0 == 1)
    est.ey1 = own.value;
  else
    est.ey0 = own.value;

  if (!opposing.in_domain(own.value)) {
    est.s = false;  // outside the identified range: nothing is imputed
    return est;
  }
  est.s = true;
  double transferred = opposing.interpolate(own.value);
  if (d0 == 1)
    est.ey0 = transferred;
  else
    est.ey1 = transferred;
  est.tau = *est.ey1 - *est.ey0;
  return est;
}

Eigen::VectorXd own_group_fits(const Workspace& ws, KernelSpec kernel,
                               std::array<double, 2> h_by_group,
                               const Eigen::VectorXd* multipliers, int threads, int* n_failed) {
  const int n = ws.n();
  Eigen::VectorXd out(n);
  parallel_for(n, threads, [&](int i) {
    int d = ws.ds.d[i];
    auto fit = try_fit_at(ws.xs, ws.ds.y, ws.group(d), ws.xs.row(i).transpose(), kernel,
                          h_by_group[d], multipliers);
    out[i] = fit ? fit->value : kNaN;
  });
  if (n_failed) *n_failed = static_cast<int>((out.array().isNaN()).count());
  return out;
}

}  // namespace comono
