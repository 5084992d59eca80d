#include "handlers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "comono/csv.hpp"
#include "comono/dgp.hpp"
#include "comono/errors.hpp"
#include "comono/inference.hpp"
#include "comono/policy.hpp"
#include "manifest.hpp"

namespace comono::cli {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json finite_or_str(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : "-inf";
}

std::string join_path(const std::string& dir, const std::string& base) {
  if (dir.empty()) return base;
  return dir.back() == '/' ? dir + base : dir + "/" + base;
}

// ---- data loading -----------------------------------------------------

struct Loaded {
  Workspace ws;
  FrontierInfo fi;
  std::string data_path;
};

ColumnSchema schema_from_cfg(const json& data) {
  ColumnSchema schema;
  schema.y_col = data.value("y_col", "y");
  schema.d_col = data.value("d_col", "d");
  if (data.contains("x_cols") && data["x_cols"].is_array())
    for (const auto& c : data["x_cols"]) schema.x_cols.push_back(c.get<std::string>());
  return schema;
}

Loaded load(const json& cfg, int threads) {
  const json& data = cfg.at("data");
  std::string path = data.at("path").get<std::string>();
  Dataset ds = load_csv(path, schema_from_cfg(data));
  Loaded out{make_workspace(std::move(ds), data.value("standardize", true)), {}, path};
  out.fi = cross_nn(out.ws, threads);
  return out;
}

// ---- bandwidth resolution ----------------------------------------------

struct DirectionConfig {
  double h, b, epsilon;
};

std::vector<double> json_grid(const json& cfg, const char* key) {
  std::vector<double> grid;
  if (cfg.contains(key) && cfg[key].is_array())
    for (const auto& v : cfg[key]) grid.push_back(v.get<double>());
  return grid;
}

/// Fills cfg["directions"][d] with resolved {h, b, epsilon} unless already
/// present (replay path). h defaults to the rule of thumb for the source
/// group, epsilon to omega * h, b to leave-one-out cross-validation on the
/// near-frontier sample.
DirectionConfig resolve_direction(json& cfg, const Loaded& ld, int d, int threads) {
  std::string key = std::to_string(d);
  if (cfg.contains("directions") && cfg["directions"].contains(key)) {
    const json& dj = cfg["directions"][key];
    return {dj.at("h").get<double>(), dj.at("b").get<double>(), dj.at("epsilon").get<double>()};
  }
  KernelSpec kernel = kernel_from_name(cfg.value("kernel", "uniform"));
  const Workspace& ws = ld.ws;
  int n_group = static_cast<int>(ws.group(d).rows.size());

  double h = 0.0;
  const json& hspec = cfg.at("h");
  if (hspec.is_number()) {
    h = hspec.get<double>();
  } else if (hspec == "auto") {
    h = rule_of_thumb_h(n_group);
  } else if (hspec == "cv") {
    std::vector<double> grid = json_grid(cfg, "h_grid");
    if (grid.empty()) {
      double rot = rule_of_thumb_h(n_group);
      double lo = std::log(0.3 * rot), hi = std::log(3.0 * rot);
      for (int i = 0; i < 10; ++i) grid.push_back(std::exp(lo + (hi - lo) * i / 9.0));
    }
    h = cv_bandwidth(ws.xs, ws.ds.y, ws.group(d), kernel, grid, threads);
  } else {
    fail(errc::invalid_argument, "--h must be a number, 'auto', or 'cv'");
  }
  if (!(h > 0.0)) fail(errc::invalid_argument, "h must be positive");

  double eps = 0.0;
  const json& espec = cfg.at("epsilon");
  if (espec.is_number())
    eps = espec.get<double>();
  else if (espec == "auto")
    eps = omega_rule(kernel) * h;
  else
    fail(errc::invalid_argument, "--epsilon must be a number or 'auto'");
  if (!(eps > 0.0)) fail(errc::invalid_argument, "epsilon must be positive");

  double b = 0.0;
  const json& bspec = cfg.at("b");
  if (bspec.is_number()) {
    b = bspec.get<double>();
  } else if (bspec == "cv" || bspec == "auto") {
    QOptions opts;
    opts.kernel = kernel;
    opts.bw = {h, 1.0, eps};
    opts.smooth_response = cfg.value("smooth_response", false);
    opts.threads = threads;
    b = cv_bandwidth_b(ws, ld.fi, d, opts, json_grid(cfg, "b_grid"));
  } else if (bspec == "rot") {
    // Scale from the outcome spread of the near-frontier regression sample.
    std::vector<double> ys;
    for (int i = 0; i < ws.n(); ++i)
      if (ws.ds.d[i] == 1 - d && ld.fi.nn_distance[i] <= eps) ys.push_back(ws.ds.y[i]);
    if (ys.size() < 2) fail(errc::no_frontier_units, "too few near-frontier units for --b rot");
    double mean = 0.0;
    for (double v : ys) mean += v;
    mean /= static_cast<double>(ys.size());
    double ss = 0.0;
    for (double v : ys) ss += (v - mean) * (v - mean);
    b = rule_of_thumb_b(std::sqrt(ss / static_cast<double>(ys.size())), ws.n());
  } else {
    fail(errc::invalid_argument, "--b must be a number, 'cv', 'rot', or 'auto'");
  }
  if (!(b > 0.0)) fail(errc::invalid_argument, "b must be positive");

  cfg["directions"][key] = {{"h", h}, {"b", b}, {"epsilon", eps}};
  return {h, b, eps};
}

QOptions make_opts(const json& cfg, const DirectionConfig& dc, int threads) {
  QOptions opts;
  opts.kernel = kernel_from_name(cfg.value("kernel", "uniform"));
  opts.bw = {dc.h, dc.b, dc.epsilon};
  opts.grid_size = cfg.value("grid_size", 100);
  opts.rearrange = cfg.value("rearrange", false);
  opts.smooth_response = cfg.value("smooth_response", false);
  opts.threads = threads;
  return opts;
}

/// Both transfer curves; direction d is the source group, so the curve built
/// with direction 1 has target 0 and vice versa.
QCurvePair build_pair(const json& cfg, const Loaded& ld, const DirectionConfig& dc0,
                      const DirectionConfig& dc1, int threads,
                      const Eigen::VectorXd* multipliers = nullptr) {
  QCurvePair pair;
  pair.q0 = estimate_q(ld.ws, ld.fi, 1, make_opts(cfg, dc1, threads), multipliers);
  pair.q1 = estimate_q(ld.ws, ld.fi, 0, make_opts(cfg, dc0, threads), multipliers);
  return pair;
}

json curve_counts(const QCurve& q) {
  return {{"regression_units", q.n_regression},
          {"endpoint_units", q.n_endpoint},
          {"dropped_grid_points", static_cast<int>(q.dropped.size())},
          {"dropped_first_stage", q.dropped_first_stage},
          {"ridged_fits", q.ridged_fits},
          {"y_low", q.y_low},
          {"y_high", q.y_high}};
}

std::string maybe_num(double v) { return std::isfinite(v) ? format_double(v) : std::string(); }

void write_qcurve_csv(const std::string& path, const QCurve& q) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(errc::io_error, "cannot write '" + path + "'");
  out << "y,qhat,lower,upper\n";
  for (Eigen::Index i = 0; i < q.grid.size(); ++i) {
    out << format_double(q.grid[i]) << ',' << format_double(q.values[i]) << ','
        << (q.lower ? maybe_num((*q.lower)[i]) : std::string()) << ','
        << (q.upper ? maybe_num((*q.upper)[i]) : std::string()) << '\n';
  }
}

BootstrapConfig bootstrap_cfg(const json& cfg, int threads) {
  BootstrapConfig bc;
  bc.draws = cfg.value("bootstrap_draws", 0);
  bc.level = cfg.value("level", 0.90);
  bc.seed = cfg.value("seed", static_cast<std::uint64_t>(0));
  bc.threads = threads;
  return bc;
}

// Scatters a possibly-thinned curve evaluation back onto the requested grid.
Eigen::VectorXd scatter_onto(const Eigen::VectorXd& grid, const QCurve& q) {
  Eigen::VectorXd out = Eigen::VectorXd::Constant(grid.size(), kNaN);
  Eigen::Index j = 0;
  for (Eigen::Index i = 0; i < grid.size() && j < q.grid.size(); ++i)
    if (q.grid[j] == grid[i]) out[i] = q.values[j], ++j;
  return out;
}

}  // namespace

// ---- simulate -----------------------------------------------------------

HandlerResult run_simulate(json cfg, const std::string& out_dir, int /*threads*/) {
  std::string dgp = cfg.at("dgp").get<std::string>();
  int n = cfg.at("n").get<int>();
  std::uint64_t seed = cfg.value("seed", static_cast<std::uint64_t>(0));

  Dataset ds;
  SyntheticTruth truth;
  if (dgp == "expository") {
    std::tie(ds, truth) = gen_expository(n, seed, cfg.value("noise_sd", 0.1));
  } else if (dgp == "linear" || dgp == "anti") {
    double c = cfg.value("slope_ratio", dgp == "anti" ? -0.5 : 0.5);
    cfg["slope_ratio"] = c;
    std::tie(ds, truth) = gen_linear_oracle(n, c, cfg.value("noise_sd", 0.1), seed);
  } else if (dgp == "skill") {
    SkillModelParams p;
    if (cfg.contains("skill")) {
      const json& s = cfg["skill"];
      p.mu_r = s.value("mu_r", p.mu_r);
      p.mu_m = s.value("mu_m", p.mu_m);
      p.sigma_r2 = s.value("sigma_r2", p.sigma_r2);
      p.sigma_m2 = s.value("sigma_m2", p.sigma_m2);
      p.sigma_rm = s.value("sigma_rm", p.sigma_rm);
      p.omega_r2 = s.value("omega_r2", p.omega_r2);
      p.omega_m2 = s.value("omega_m2", p.omega_m2);
      p.a0 = s.value("a0", p.a0);
      p.b0 = s.value("b0", p.b0);
      p.a1 = s.value("a1", p.a1);
      p.b1 = s.value("b1", p.b1);
      p.eta_sd = s.value("eta_sd", p.eta_sd);
      p.score_noise_sd = s.value("score_noise_sd", p.score_noise_sd);
    }
    LinearRule rule;
    if (cfg.contains("skill") && cfg["skill"].contains("cutoff"))
      rule = LinearRule{Eigen::Vector2d(0.0, 1.0), cfg["skill"]["cutoff"].get<double>()};
    cfg["skill"] = {{"mu_r", p.mu_r},       {"mu_m", p.mu_m},
                    {"sigma_r2", p.sigma_r2}, {"sigma_m2", p.sigma_m2},
                    {"sigma_rm", p.sigma_rm}, {"omega_r2", p.omega_r2},
                    {"omega_m2", p.omega_m2}, {"a0", p.a0},
                    {"b0", p.b0},           {"a1", p.a1},
                    {"b1", p.b1},           {"eta_sd", p.eta_sd},
                    {"score_noise_sd", p.score_noise_sd},
                    {"cutoff", rule.coefs.size() ? rule.cutoff : p.mu_m}};
    std::tie(ds, truth) = gen_skill_model(n, p, rule, seed);
  } else {
    fail(errc::invalid_argument, "unknown dgp '" + dgp + "'");
  }
  cfg["seed"] = seed;

  std::string data_base = cfg.at("out").get<std::string>();
  write_csv(join_path(out_dir, data_base), ds);

  json outputs = {{"data", data_base}};
  if (cfg.contains("truth_out") && cfg["truth_out"].is_string()) {
    json tj = {{"params", truth.params},
               {"q0_domain", {finite_or_str(truth.q0_low), finite_or_str(truth.q0_high)}},
               {"q1_domain", {finite_or_str(truth.q1_low), finite_or_str(truth.q1_high)}}};
    std::string truth_base = cfg["truth_out"].get<std::string>();
    write_text_file(join_path(out_dir, truth_base), tj.dump(2) + "\n");
    outputs["truth"] = truth_base;
  }

  Partition part = partition(ds);
  json counts = {{"n", ds.n()},
                 {"treated", static_cast<int>(part.treated.size())},
                 {"untreated", static_cast<int>(part.untreated.size())}};
  return {cfg, json::object(), outputs, counts};
}

// ---- estimate-q / bootstrap ----------------------------------------------

HandlerResult run_estimate_q(json cfg, const std::string& out_dir, int threads) {
  Loaded ld = load(cfg, threads);
  int d = cfg.value("direction", 1);
  DirectionConfig dc = resolve_direction(cfg, ld, d, threads);
  QOptions opts = make_opts(cfg, dc, threads);
  BootstrapConfig bc = bootstrap_cfg(cfg, threads);

  std::vector<int> strata_cols;
  for (const auto& c : cfg.value("strata_cols", json::array())) {
    const auto& names = ld.ws.ds.names;
    auto it = std::find(names.begin(), names.end(), c.get<std::string>());
    if (it == names.end())
      fail(errc::missing_column, "strata column '" + c.get<std::string>() + "' not found");
    strata_cols.push_back(static_cast<int>(it - names.begin()));
  }

  std::string out_base = cfg.at("out").get<std::string>();
  json counts;

  if (strata_cols.empty()) {
    QCurve q = estimate_q(ld.ws, ld.fi, d, opts);
    if (bc.draws > 0) {
      Eigen::VectorXd grid = q.grid;
      auto closure = [&](const Eigen::VectorXd& mult) {
        return scatter_onto(grid, estimate_q_at(ld.ws, ld.fi, d, opts, grid, &mult));
      };
      Bands bands = bootstrap_bands(ld.ws.n(), q.values, closure, bc);
      q.lower = bands.lower;
      q.upper = bands.upper;
      counts["discarded_draws"] = bands.discarded_draws;
    }
    write_qcurve_csv(join_path(out_dir, out_base), q);
    counts.update(curve_counts(q));
  } else {
    if (bc.draws > 0)
      fail(errc::invalid_argument, "bootstrap bands are not supported for stratified curves");
    if (static_cast<int>(strata_cols.size()) + 2 > ld.ws.k())
      std::fprintf(stderr,
                   "warning: fewer than 2 non-stratum covariates; identification is fragile\n");
    // Stratum evaluation points: as given, or the distinct observed
    // combinations (resolved once and recorded).
    Eigen::MatrixXd pts;
    if (cfg.contains("strata_points") && !cfg["strata_points"].empty()) {
      const json& sp = cfg["strata_points"];
      pts.resize(sp.size(), strata_cols.size());
      for (Eigen::Index i = 0; i < pts.rows(); ++i)
        for (Eigen::Index j = 0; j < pts.cols(); ++j) pts(i, j) = sp[i][j].get<double>();
    } else {
      std::set<std::vector<double>> uniq;
      for (int i = 0; i < ld.ws.n(); ++i) {
        std::vector<double> key;
        for (int c : strata_cols) key.push_back(ld.ws.ds.x(i, c));
        uniq.insert(key);
        if (uniq.size() > 64)
          fail(errc::invalid_argument,
               "more than 64 distinct strata; pass explicit --strata-points");
      }
      pts.resize(static_cast<Eigen::Index>(uniq.size()), strata_cols.size());
      Eigen::Index r = 0;
      json recorded = json::array();
      for (const auto& key : uniq) {
        json row = json::array();
        for (Eigen::Index j = 0; j < pts.cols(); ++j) {
          pts(r, j) = key[j];
          row.push_back(key[j]);
        }
        recorded.push_back(row);
        ++r;
      }
      cfg["strata_points"] = recorded;
    }

    auto curves = estimate_q_conditional(ld.ws, ld.fi, d, strata_cols, opts, pts);
    std::ofstream out(join_path(out_dir, out_base), std::ios::binary);
    if (!out) fail(errc::io_error, "cannot write '" + out_base + "'");
    out << "stratum,y,qhat\n";
    int dropped = 0;
    for (std::size_t s = 0; s < curves.size(); ++s) {
      dropped += static_cast<int>(curves[s].dropped.size());
      for (Eigen::Index i = 0; i < curves[s].grid.size(); ++i)
        out << s << ',' << format_double(curves[s].grid[i]) << ','
            << format_double(curves[s].values[i]) << '\n';
    }
    counts["strata"] = static_cast<int>(curves.size());
    counts["dropped_grid_points"] = dropped;
    if (!curves.empty())
      for (auto& [key, value] : curve_counts(curves[0]).items())
        if (!counts.contains(key)) counts[key] = value;
  }

  auto nf = near_frontier_counts(set_weights(ld.fi, ld.ws, dc.epsilon), ld.ws);
  counts["near_frontier"] = {nf[0], nf[1]};

  json inputs = {{"data", {{"path", ld.data_path}, {"digest", digest_file(ld.data_path)}}}};
  return {cfg, inputs, json{{"qcurve", out_base}}, counts};
}

// ---- cate -----------------------------------------------------------------

HandlerResult run_cate(json cfg, const std::string& out_dir, int threads) {
  Loaded ld = load(cfg, threads);
  DirectionConfig dc0 = resolve_direction(cfg, ld, 0, threads);
  DirectionConfig dc1 = resolve_direction(cfg, ld, 1, threads);
  QCurvePair pair = build_pair(cfg, ld, dc0, dc1, threads);

  const json& pts = cfg.at("points");
  std::string region_spec = cfg.value("region", "auto");

  std::string out_base = cfg.at("out").get<std::string>();
  std::ofstream out(join_path(out_dir, out_base), std::ios::binary);
  if (!out) fail(errc::io_error, "cannot write '" + out_base + "'");
  for (const auto& name : ld.ws.ds.names) out << name << ',';
  out << "region,s,tau,ey1,ey0\n";

  int n_identified = 0;
  for (const auto& p : pts) {
    if (static_cast<int>(p.size()) != ld.ws.k())
      fail(errc::invalid_argument, "point dimension does not match covariates");
    Eigen::VectorXd x(ld.ws.k());
    for (int j = 0; j < ld.ws.k(); ++j) x[j] = p[j].get<double>();

    int region;
    if (region_spec == "auto") {
      // Region of the nearest sample unit (lowest id on ties).
      Eigen::VectorXd xi = ld.ws.to_internal(x);
      double d0 = 0, d1 = 0;
      int i0 = ld.ws.group(0).tree.nearest(xi, &d0);
      int i1 = ld.ws.group(1).tree.nearest(xi, &d1);
      region = (d1 < d0 || (d1 == d0 && i1 < i0)) ? 1 : 0;
    } else {
      region = std::stoi(region_spec);
    }

    CateEstimate est = cate_at(ld.ws, pair, x, region);
    n_identified += est.s ? 1 : 0;
    for (int j = 0; j < ld.ws.k(); ++j) out << format_double(x[j]) << ',';
    out << est.region << ',' << (est.s ? 1 : 0) << ','
        << (est.tau ? format_double(*est.tau) : std::string()) << ','
        << (est.ey1 ? format_double(*est.ey1) : std::string()) << ','
        << (est.ey0 ? format_double(*est.ey0) : std::string()) << '\n';
  }

  json counts = {{"points", static_cast<int>(pts.size())},
                 {"identified", n_identified},
                 {"q0", curve_counts(pair.q0)},
                 {"q1", curve_counts(pair.q1)}};
  json inputs = {{"data", {{"path", ld.data_path}, {"digest", digest_file(ld.data_path)}}}};
  return {cfg, inputs, json{{"cate", out_base}}, counts};
}

// ---- policy / policy-sweep -------------------------------------------------

namespace {

struct PolicyContext {
  QCurvePair pair;
  Eigen::VectorXd own_fit;
  std::vector<std::uint8_t> s;
};

PolicyContext policy_context(const json& cfg, const Loaded& ld, const DirectionConfig& dc0,
                             const DirectionConfig& dc1, int threads,
                             const Eigen::VectorXd* mult = nullptr) {
  PolicyContext ctx;
  ctx.pair = build_pair(cfg, ld, dc0, dc1, threads, mult);
  KernelSpec kernel = kernel_from_name(cfg.value("kernel", "uniform"));
  // Own-group fits use each group's source-direction bandwidth.
  ctx.own_fit = own_group_fits(ld.ws, kernel, {dc0.h, dc1.h}, mult, threads);
  ctx.s = s_indicator(ld.ws, ctx.pair, ctx.own_fit);
  return ctx;
}

}  // namespace

HandlerResult run_policy(json cfg, const std::string& out_dir, int threads) {
  Loaded ld = load(cfg, threads);
  DirectionConfig dc0 = resolve_direction(cfg, ld, 0, threads);
  DirectionConfig dc1 = resolve_direction(cfg, ld, 1, threads);
  PolicyContext ctx = policy_context(cfg, ld, dc0, dc1, threads);

  PolicySpec spec = parse_rule(cfg.at("rule").get<std::string>(), ld.ws.ds);
  PolicyEffect eff = policy_effect(ld.ws, spec, ctx.pair, ctx.own_fit, ctx.s);

  json result = {{"rule", cfg.at("rule")},
                 {"theta", eff.theta},
                 {"n_identified", eff.n_identified},
                 {"n_affected", eff.n_affected},
                 {"net_change_avg", eff.net_change_avg},
                 {"net_change_count", eff.net_change_count}};

  BootstrapConfig bc = bootstrap_cfg(cfg, threads);
  json counts = {{"q0", curve_counts(ctx.pair.q0)}, {"q1", curve_counts(ctx.pair.q1)}};
  if (bc.draws > 0) {
    Eigen::VectorXd base(1);
    base[0] = eff.theta;
    auto closure = [&](const Eigen::VectorXd& mult) {
      PolicyContext c = policy_context(cfg, ld, dc0, dc1, threads, &mult);
      Eigen::VectorXd v(1);
      v[0] = policy_effect(ld.ws, spec, c.pair, c.own_fit, c.s).theta;
      return v;
    };
    Bands bands = bootstrap_bands(ld.ws.n(), base, closure, bc);
    result["theta_lower"] = bands.lower[0];
    result["theta_upper"] = bands.upper[0];
    counts["discarded_draws"] = bands.discarded_draws;
  }

  std::string out_base = cfg.at("out").get<std::string>();
  write_text_file(join_path(out_dir, out_base), result.dump(2) + "\n");

  json inputs = {{"data", {{"path", ld.data_path}, {"digest", digest_file(ld.data_path)}}}};
  return {cfg, inputs, json{{"policy", out_base}}, counts};
}

HandlerResult run_policy_sweep(json cfg, const std::string& out_dir, int threads) {
  Loaded ld = load(cfg, threads);
  DirectionConfig dc0 = resolve_direction(cfg, ld, 0, threads);
  DirectionConfig dc1 = resolve_direction(cfg, ld, 1, threads);
  PolicyContext ctx = policy_context(cfg, ld, dc0, dc1, threads);

  std::string axis_name = cfg.at("axis").get<std::string>();
  const auto& names = ld.ws.ds.names;
  auto it = std::find(names.begin(), names.end(), axis_name);
  if (it == names.end()) fail(errc::missing_column, "axis '" + axis_name + "' not found");
  int axis = static_cast<int>(it - names.begin());
  bool treat_below = cfg.value("treat_below", true);
  std::vector<double> cutoffs;
  for (const auto& c : cfg.at("cutoffs")) cutoffs.push_back(c.get<double>());

  auto rows = threshold_sweep(ld.ws, axis, cutoffs, treat_below, ctx.pair, ctx.own_fit, ctx.s);

  BootstrapConfig bc = bootstrap_cfg(cfg, threads);
  Eigen::VectorXd lower, upper;
  int discarded = 0;
  if (bc.draws > 0) {
    Eigen::VectorXd base(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      base[static_cast<Eigen::Index>(i)] = rows[i].ok ? rows[i].effect.theta : kNaN;
    auto closure = [&](const Eigen::VectorXd& mult) {
      PolicyContext c = policy_context(cfg, ld, dc0, dc1, threads, &mult);
      auto rs = threshold_sweep(ld.ws, axis, cutoffs, treat_below, c.pair, c.own_fit, c.s);
      Eigen::VectorXd v(rs.size());
      for (std::size_t i = 0; i < rs.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = rs[i].ok ? rs[i].effect.theta : kNaN;
      return v;
    };
    Bands bands = bootstrap_bands(ld.ws.n(), base, closure, bc);
    lower = bands.lower;
    upper = bands.upper;
    discarded = bands.discarded_draws;
  }

  std::string out_base = cfg.at("out").get<std::string>();
  std::ofstream out(join_path(out_dir, out_base), std::ios::binary);
  if (!out) fail(errc::io_error, "cannot write '" + out_base + "'");
  out << "cutoff,theta,theta_lower,theta_upper,n_affected,n_identified\n";
  int failed = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out << format_double(r.cutoff) << ',';
    if (r.ok) {
      out << format_double(r.effect.theta) << ','
          << (lower.size() ? maybe_num(lower[static_cast<Eigen::Index>(i)]) : std::string())
          << ','
          << (upper.size() ? maybe_num(upper[static_cast<Eigen::Index>(i)]) : std::string())
          << ',' << format_double(r.effect.n_affected) << ',' << r.effect.n_identified << '\n';
    } else {
      out << ",,,,\n";
      ++failed;
    }
  }

  json counts = {{"q0", curve_counts(ctx.pair.q0)},
                 {"q1", curve_counts(ctx.pair.q1)},
                 {"cutoffs", static_cast<int>(rows.size())},
                 {"failed_cutoffs", failed}};
  if (bc.draws > 0) counts["discarded_draws"] = discarded;
  json inputs = {{"data", {{"path", ld.data_path}, {"digest", digest_file(ld.data_path)}}}};
  return {cfg, inputs, json{{"sweep", out_base}}, counts};
}

// ---- diagnose ---------------------------------------------------------------

HandlerResult run_diagnose(json cfg, const std::string& out_dir, int threads) {
  Loaded ld = load(cfg, threads);
  std::string source = cfg.value("source", "curve");

  std::vector<std::array<double, 2>> pairs;
  json counts;
  if (source == "curve") {
    int d = cfg.value("direction", 1);
    DirectionConfig dc = resolve_direction(cfg, ld, d, threads);
    QOptions opts = make_opts(cfg, dc, threads);
    QCurve q;
    if (cfg.value("full_range", false)) {
      q = estimate_q(ld.ws, ld.fi, d, opts);
    } else {
      // Probe the domain first, then evaluate on the inner support band so
      // sparse tail grid points never enter the statistic. Grid spacing
      // defaults to the smoothing bandwidth: evaluating a kernel-smoothed
      // curve finer than b turns shared-window noise into spurious sign
      // flips, while steps of b apart are nearly independent.
      QCurve probe = estimate_q_at(ld.ws, ld.fi, d, opts, Eigen::VectorXd());
      double band = probe.support_high - probe.support_low;
      int m;
      if (cfg.contains("grid_size"))
        m = std::max(2, cfg["grid_size"].get<int>());
      else
        m = std::max(2, static_cast<int>(std::floor(band / opts.bw.b)) + 1);
      Eigen::VectorXd grid(m);
      for (int i = 0; i < m; ++i)
        grid[i] = probe.support_low + band * i / static_cast<double>(m - 1);
      q = estimate_q_at(ld.ws, ld.fi, d, opts, grid);
    }
    pairs = curve_value_pairs(q, false);
    counts = curve_counts(q);
    counts["support_band"] = {q.support_low, q.support_high};
  } else if (source == "units") {
    KernelSpec kernel = kernel_from_name(cfg.value("kernel", "uniform"));
    double h0, h1, eps;
    if (cfg.contains("units")) {
      h0 = cfg["units"].at("h0").get<double>();
      h1 = cfg["units"].at("h1").get<double>();
      eps = cfg["units"].at("epsilon").get<double>();
    } else {
      const json& hspec = cfg.at("h");
      if (hspec.is_number()) {
        h0 = h1 = hspec.get<double>();
      } else {
        h0 = rule_of_thumb_h(static_cast<int>(ld.ws.group(0).rows.size()));
        h1 = rule_of_thumb_h(static_cast<int>(ld.ws.group(1).rows.size()));
      }
      const json& espec = cfg.at("epsilon");
      eps = espec.is_number() ? espec.get<double>()
                              : omega_rule(kernel) * 0.5 * (h0 + h1);
      cfg["units"] = {{"h0", h0}, {"h1", h1}, {"epsilon", eps}};
    }
    pairs = unit_value_pairs(ld.ws, ld.fi, eps, kernel, {h0, h1}, threads);
    counts = {{"near_frontier_pairs", static_cast<int>(pairs.size())}};
  } else {
    fail(errc::invalid_argument, "--pairs must be 'curve' or 'units'");
  }

  ComonoDiagnostic diag = comono_diagnostic(pairs);
  json result = {{"statistic", diag.statistic},
                 {"pair", {diag.first, diag.second}},
                 {"n_pairs", diag.n_pairs},
                 {"n_points", static_cast<int>(pairs.size())},
                 {"source", source}};
  std::string out_base = cfg.at("out").get<std::string>();
  write_text_file(join_path(out_dir, out_base), result.dump(2) + "\n");

  json inputs = {{"data", {{"path", ld.data_path}, {"digest", digest_file(ld.data_path)}}}};
  return {cfg, inputs, json{{"diagnostic", out_base}}, counts};
}

HandlerResult dispatch(const std::string& subcommand, json cfg, const std::string& out_dir,
                       int threads) {
  if (subcommand == "simulate") return run_simulate(std::move(cfg), out_dir, threads);
  if (subcommand == "estimate-q" || subcommand == "bootstrap")
    return run_estimate_q(std::move(cfg), out_dir, threads);
  if (subcommand == "cate") return run_cate(std::move(cfg), out_dir, threads);
  if (subcommand == "policy") return run_policy(std::move(cfg), out_dir, threads);
  if (subcommand == "policy-sweep") return run_policy_sweep(std::move(cfg), out_dir, threads);
  if (subcommand == "diagnose") return run_diagnose(std::move(cfg), out_dir, threads);
  fail(errc::invalid_argument, "unknown subcommand '" + subcommand + "' in manifest");
}

}  // namespace comono::cli
