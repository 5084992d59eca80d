#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "comono/errors.hpp"
#include "comono/parallel.hpp"
#include "handlers.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;
using comono::cli::HandlerResult;
using nlohmann::json;

namespace {

struct OutSpec {
  std::string dir;        // directory all artifacts land in
  std::string base;       // primary artifact basename
  std::string manifest;   // manifest path
};

OutSpec split_out(const std::string& out_path, const std::string& manifest_flag) {
  fs::path p(out_path);
  OutSpec spec;
  spec.dir = p.has_parent_path() ? p.parent_path().string() : std::string(".");
  spec.base = p.filename().string();
  spec.manifest =
      manifest_flag.empty() ? (fs::path(spec.dir) / (spec.base + ".manifest.json")).string()
                            : manifest_flag;
  return spec;
}

void finish(const std::string& subcommand, const OutSpec& spec, const HandlerResult& result) {
  comono::cli::write_manifest(spec.manifest, subcommand, result.config, result.inputs,
                              result.outputs, result.counts);
  std::printf("%s: wrote", subcommand.c_str());
  for (const auto& [role, base] : result.outputs.items())
    std::printf(" %s", (fs::path(spec.dir) / base.get<std::string>()).string().c_str());
  std::printf(" (+ %s)\n", spec.manifest.c_str());
}

std::vector<double> parse_range(const std::string& text, bool log_spaced) {
  auto fail_spec = [&]() {
    comono::fail(comono::errc::invalid_argument,
                 "range '" + text + "' must be lo:hi:steps with lo <= hi, steps >= 1");
  };
  double lo = 0, hi = 0;
  int steps = 0;
  if (std::sscanf(text.c_str(), "%lf:%lf:%d", &lo, &hi, &steps) != 3) fail_spec();
  if (steps < 1 || hi < lo || (log_spaced && lo <= 0.0)) fail_spec();
  std::vector<double> out;
  if (steps == 1) {
    out.push_back(log_spaced ? std::sqrt(lo * hi) : 0.5 * (lo + hi));
    return out;
  }
  for (int i = 0; i < steps; ++i) {
    double t = static_cast<double>(i) / (steps - 1);
    out.push_back(log_spaced ? std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)))
                             : lo + t * (hi - lo));
  }
  return out;
}

json parse_points(const std::string& inline_points, const std::string& points_file) {
  json pts = json::array();
  if (!inline_points.empty()) {
    std::string cur;
    std::vector<std::string> groups;
    for (char c : inline_points) {
      if (c == ';') {
        groups.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    groups.push_back(cur);
    for (const auto& g : groups) {
      json row = json::array();
      std::string item;
      for (char c : g + ",") {
        if (c == ',') {
          if (!item.empty()) row.push_back(std::strtod(item.c_str(), nullptr));
          item.clear();
        } else {
          item += c;
        }
      }
      if (!row.empty()) pts.push_back(row);
    }
  } else if (!points_file.empty()) {
    // Headerless CSV, one point per row, columns in covariate order.
    std::string bytes = comono::cli::read_file(points_file);
    json row = json::array();
    std::string item;
    for (char c : bytes + "\n") {
      if (c == ',' || c == '\n' || c == '\r') {
        if (!item.empty()) {
          row.push_back(std::strtod(item.c_str(), nullptr));
          item.clear();
        }
        if (c == '\n' && !row.empty()) {
          pts.push_back(row);
          row = json::array();
        }
      } else {
        item += c;
      }
    }
  }
  if (pts.empty())
    comono::fail(comono::errc::invalid_argument, "no evaluation points given (--points or --points-file)");
  return pts;
}

// Shared estimation flags -> config entries.
struct EstFlags {
  std::string in, y_col = "y", d_col = "d", x_cols;
  bool no_standardize = false;
  std::string kernel = "uniform";
  std::string h = "auto", b = "auto", epsilon = "auto";
  std::string cv_grid, b_grid;
  int grid_size = 100;
  bool rearrange = false, smooth_response = false;
  int bootstrap_draws = 0;
  double level = 0.90;
  std::uint64_t seed = 0;
};

void add_est_flags(CLI::App* cmd, EstFlags& f, bool with_bands) {
  cmd->add_option("--in", f.in, "input CSV")->required();
  cmd->add_option("--y-col", f.y_col, "outcome column (default y)");
  cmd->add_option("--d-col", f.d_col, "treatment column (default d)");
  cmd->add_option("--x-cols", f.x_cols, "comma-separated covariate columns (default: all others)");
  cmd->add_flag("--no-standardize", f.no_standardize,
                "use raw covariate units for distances and bandwidths");
  cmd->add_option("--kernel", f.kernel, "uniform|triangular|epanechnikov|gaussian")
      ->check(CLI::IsMember({"uniform", "triangular", "epanechnikov", "gaussian"}));
  cmd->add_option("--h", f.h, "first-stage bandwidth: number, 'auto' (rule of thumb), or 'cv'");
  cmd->add_option("--b", f.b, "second-stage bandwidth: number, 'auto'/'cv', or 'rot'");
  cmd->add_option("--epsilon", f.epsilon, "near-frontier radius: number or 'auto' (omega*h)");
  cmd->add_option("--cv-grid", f.cv_grid, "log-spaced lo:hi:steps grid for --h cv");
  cmd->add_option("--b-grid", f.b_grid, "log-spaced lo:hi:steps grid for --b cv");
  if (with_bands) {
    cmd->add_option("--bootstrap-draws", f.bootstrap_draws, "multiplier bootstrap draws");
    cmd->add_option("--level", f.level, "band coverage level (default 0.90)");
    cmd->add_option("--seed", f.seed, "bootstrap seed");
  }
}

json est_config(const EstFlags& f) {
  json data = {{"path", f.in},
               {"y_col", f.y_col},
               {"d_col", f.d_col},
               {"standardize", !f.no_standardize}};
  if (!f.x_cols.empty()) {
    json cols = json::array();
    std::string item;
    for (char c : f.x_cols + ",") {
      if (c == ',') {
        if (!item.empty()) cols.push_back(item);
        item.clear();
      } else {
        item += c;
      }
    }
    data["x_cols"] = cols;
  }
  json cfg = {{"data", data},       {"kernel", f.kernel},
              {"h", f.h},           {"b", f.b},
              {"epsilon", f.epsilon}, {"bootstrap_draws", f.bootstrap_draws},
              {"level", f.level},   {"seed", f.seed}};
  // Numeric bandwidths arrive as strings from the flag; normalize.
  for (const char* key : {"h", "b", "epsilon"}) {
    std::string v = cfg[key].get<std::string>();
    char* end = nullptr;
    double num = std::strtod(v.c_str(), &end);
    if (end == v.c_str() + v.size() && !v.empty()) cfg[key] = num;
  }
  if (!f.cv_grid.empty()) cfg["h_grid"] = parse_range(f.cv_grid, true);
  if (!f.b_grid.empty()) cfg["b_grid"] = parse_range(f.b_grid, true);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"comonotone transfer estimation for multivariate sharp RDD samples"};
  app.require_subcommand(1);
  // --h is an estimation flag, so help is long-form only.
  app.set_help_flag("--help", "print help");
  int threads = 0;
  app.add_option("--threads", threads,
                 "worker threads (default: COMONO_RDD_THREADS or all cores); results do not "
                 "depend on this")
      ->capture_default_str();

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a synthetic sample with known truth");
  sim->set_help_flag("--help", "print help");
  sim->fallthrough();
  struct {
    std::string dgp = "linear", out = "data.csv", truth_out;
    int n = 20000;
    std::uint64_t seed = 0;
    double noise_sd = 0.1, slope_ratio = std::numeric_limits<double>::quiet_NaN();
    double skill_rm = 0.95, skill_cutoff = std::numeric_limits<double>::quiet_NaN();
    double skill_eta_sd = 0.05, skill_noise_sd = 0.05;
    double skill_a0 = 0.0, skill_b0 = 1.0, skill_a1 = 0.3, skill_b1 = 0.8;
  } sf;
  sim->add_option("--dgp", sf.dgp, "expository|skill|linear|anti")
      ->check(CLI::IsMember({"expository", "skill", "linear", "anti"}));
  sim->add_option("--n", sf.n, "sample size")->required();
  sim->add_option("--seed", sf.seed, "generator seed");
  sim->add_option("--noise-sd", sf.noise_sd, "outcome noise (expository/linear)");
  sim->add_option("--slope-ratio", sf.slope_ratio, "untreated/treated slope ratio (linear)");
  sim->add_option("--skill-rm", sf.skill_rm, "skill covariance sigma_rm");
  sim->add_option("--skill-cutoff", sf.skill_cutoff, "treat iff math score <= cutoff");
  sim->add_option("--skill-eta-sd", sf.skill_eta_sd, "skill-formation noise sd");
  sim->add_option("--skill-noise-sd", sf.skill_noise_sd, "outcome measurement noise sd");
  sim->add_option("--skill-a0", sf.skill_a0, "untreated arm intercept");
  sim->add_option("--skill-b0", sf.skill_b0, "untreated arm slope");
  sim->add_option("--skill-a1", sf.skill_a1, "treated arm intercept");
  sim->add_option("--skill-b1", sf.skill_b1, "treated arm slope");
  sim->add_option("--out", sf.out, "output CSV path");
  sim->add_option("--truth-out", sf.truth_out, "ground-truth JSON (same directory as --out)");

  // estimate-q / bootstrap
  EstFlags qf;
  struct {
    int direction = 1;
    std::string strata_cols, strata_points, out = "qcurve.csv", manifest;
  } qx;
  auto add_q = [&](CLI::App* cmd) {
    add_est_flags(cmd, qf, true);
    cmd->add_option("--direction", qx.direction, "source group d; the curve targets 1-d")
        ->check(CLI::IsMember({0, 1}));
    cmd->add_option("--grid-size", qf.grid_size, "evaluation grid size (default 100)");
    cmd->add_flag("--rearrange", qf.rearrange, "nondecreasing rearrangement of the curve");
    cmd->add_flag("--smooth-response", qf.smooth_response,
                  "regress own-group fitted values instead of raw outcomes");
    cmd->add_option("--strata-cols", qx.strata_cols, "stratify on these covariates");
    cmd->add_option("--strata-points", qx.strata_points,
                    "stratum evaluation points 'v1,v2;v1,v2;...' (default: observed values)");
    cmd->add_option("--out", qx.out, "q-curve CSV path");
    cmd->add_option("--manifest-out", qx.manifest, "manifest path");
  };
  auto* estq = app.add_subcommand("estimate-q", "estimate the transfer curve q_{1-d}");
  estq->set_help_flag("--help", "print help");
  estq->fallthrough();
  add_q(estq);
  auto* boot = app.add_subcommand("bootstrap",
                                  "estimate-q with multiplier-bootstrap bands (default 100 draws)");
  boot->set_help_flag("--help", "print help");
  boot->fallthrough();
  add_q(boot);

  // cate
  EstFlags cf;
  struct {
    std::string points, points_file, region = "auto", out = "cate.csv", manifest;
  } cx;
  auto* cate = app.add_subcommand("cate", "impute treatment effects at covariate points");
  cate->set_help_flag("--help", "print help");
  cate->fallthrough();
  add_est_flags(cate, cf, false);
  cate->add_option("--grid-size", cf.grid_size, "transfer-curve grid size");
  cate->add_option("--points", cx.points, "inline points 'x1,x2;x1,x2;...' (raw units)");
  cate->add_option("--points-file", cx.points_file, "headerless CSV of points");
  cate->add_option("--region", cx.region, "auto|0|1: which region the points belong to")
      ->check(CLI::IsMember({"auto", "0", "1"}));
  cate->add_option("--out", cx.out, "output CSV path");
  cate->add_option("--manifest-out", cx.manifest, "manifest path");

  // policy
  EstFlags pf;
  struct {
    std::string rule, out = "policy.json", manifest;
  } px;
  auto* pol = app.add_subcommand("policy", "counterfactual policy effect for a rule");
  pol->set_help_flag("--help", "print help");
  pol->fallthrough();
  add_est_flags(pol, pf, true);
  pol->add_option("--grid-size", pf.grid_size, "transfer-curve grid size");
  pol->add_option("--rule", px.rule,
                  "'x1<=0.5', '0.4*x1+x2<=0.7', 'p=0.3', or 'factual'")
      ->required();
  pol->add_option("--out", px.out, "output JSON path");
  pol->add_option("--manifest-out", px.manifest, "manifest path");

  // policy-sweep
  EstFlags wf;
  struct {
    std::string axis, cutoffs, out = "sweep.csv", manifest;
    bool treat_above = false;
  } wx;
  auto* sweep = app.add_subcommand("policy-sweep",
                                   "sweep cutoff expansions of the factual rule along one axis");
  sweep->set_help_flag("--help", "print help");
  sweep->fallthrough();
  add_est_flags(sweep, wf, true);
  sweep->add_option("--grid-size", wf.grid_size, "transfer-curve grid size");
  sweep->add_option("--axis", wx.axis, "covariate to sweep")->required();
  sweep->add_option("--cutoffs", wx.cutoffs, "lo:hi:steps (linear)")->required();
  sweep->add_flag("--treat-above", wx.treat_above, "expand with x >= cutoff instead of x <= cutoff");
  sweep->add_option("--out", wx.out, "output CSV path");
  sweep->add_option("--manifest-out", wx.manifest, "manifest path");

  // diagnose
  EstFlags df;
  struct {
    std::string source = "curve", out = "diagnostic.json", manifest;
    int direction = 1;
    bool full_range = false;
  } dx;
  auto* diag = app.add_subcommand("diagnose", "comonotonicity diagnostic (min pairwise product)");
  diag->set_help_flag("--help", "print help");
  diag->fallthrough();
  add_est_flags(diag, df, false);
  diag->add_option("--pairs", dx.source, "curve|units: evaluation pairs source")
      ->check(CLI::IsMember({"curve", "units"}));
  diag->add_flag("--full-range", dx.full_range,
                 "evaluate curve pairs over the full estimated domain, including sparse tails");
  diag->add_option("--direction", dx.direction, "curve direction for --pairs curve")
      ->check(CLI::IsMember({0, 1}));
  diag->add_option("--grid-size", df.grid_size,
                   "curve grid size for --pairs curve (default: one point per bandwidth)");
  diag->add_option("--out", dx.out, "output JSON path");
  diag->add_option("--manifest-out", dx.manifest, "manifest path");

  // replay
  struct {
    std::string manifest, out_dir;
  } rx;
  auto* replay = app.add_subcommand("replay", "re-run a recorded manifest bit-identically");
  replay->set_help_flag("--help", "print help");
  replay->fallthrough();
  replay->add_option("manifest", rx.manifest, "manifest JSON from a previous run")->required();
  replay->add_option("--out-dir", rx.out_dir, "directory for the replayed artifacts")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  int nthreads = comono::resolve_thread_count(threads);
  try {
    if (sim->parsed()) {
      OutSpec spec = split_out(sf.out, "");
      fs::create_directories(spec.dir);
      json cfg = {{"dgp", sf.dgp}, {"n", sf.n}, {"seed", sf.seed},
                  {"noise_sd", sf.noise_sd}, {"out", spec.base}};
      if (!std::isnan(sf.slope_ratio)) cfg["slope_ratio"] = sf.slope_ratio;
      if (sf.dgp == "skill") {
        json skill = {{"sigma_rm", sf.skill_rm},   {"eta_sd", sf.skill_eta_sd},
                      {"score_noise_sd", sf.skill_noise_sd},
                      {"a0", sf.skill_a0},         {"b0", sf.skill_b0},
                      {"a1", sf.skill_a1},         {"b1", sf.skill_b1}};
        if (!std::isnan(sf.skill_cutoff)) skill["cutoff"] = sf.skill_cutoff;
        cfg["skill"] = skill;
      }
      if (!sf.truth_out.empty()) cfg["truth_out"] = fs::path(sf.truth_out).filename().string();
      finish("simulate", spec, comono::cli::run_simulate(cfg, spec.dir, nthreads));
    } else if (estq->parsed() || boot->parsed()) {
      json cfg = est_config(qf);
      if (boot->parsed() && qf.bootstrap_draws == 0) cfg["bootstrap_draws"] = 100;
      cfg["direction"] = qx.direction;
      cfg["grid_size"] = qf.grid_size;
      cfg["rearrange"] = qf.rearrange;
      cfg["smooth_response"] = qf.smooth_response;
      if (!qx.strata_cols.empty()) {
        json cols = json::array();
        std::string item;
        for (char c : qx.strata_cols + ",") {
          if (c == ',') {
            if (!item.empty()) cols.push_back(item);
            item.clear();
          } else
            item += c;
        }
        cfg["strata_cols"] = cols;
        if (!qx.strata_points.empty()) {
          json pts = json::array();
          for (const auto& row : parse_points(qx.strata_points, "")) pts.push_back(row);
          cfg["strata_points"] = pts;
        }
      }
      OutSpec spec = split_out(qx.out, qx.manifest);
      fs::create_directories(spec.dir);
      cfg["out"] = spec.base;
      finish(estq->parsed() ? "estimate-q" : "bootstrap", spec,
             comono::cli::run_estimate_q(cfg, spec.dir, nthreads));
    } else if (cate->parsed()) {
      json cfg = est_config(cf);
      cfg["grid_size"] = cf.grid_size;
      cfg["points"] = parse_points(cx.points, cx.points_file);
      cfg["region"] = cx.region;
      OutSpec spec = split_out(cx.out, cx.manifest);
      fs::create_directories(spec.dir);
      cfg["out"] = spec.base;
      finish("cate", spec, comono::cli::run_cate(cfg, spec.dir, nthreads));
    } else if (pol->parsed()) {
      json cfg = est_config(pf);
      cfg["grid_size"] = pf.grid_size;
      cfg["rule"] = px.rule;
      OutSpec spec = split_out(px.out, px.manifest);
      fs::create_directories(spec.dir);
      cfg["out"] = spec.base;
      finish("policy", spec, comono::cli::run_policy(cfg, spec.dir, nthreads));
    } else if (sweep->parsed()) {
      json cfg = est_config(wf);
      cfg["grid_size"] = wf.grid_size;
      cfg["axis"] = wx.axis;
      cfg["cutoffs"] = parse_range(wx.cutoffs, false);
      cfg["treat_below"] = !wx.treat_above;
      OutSpec spec = split_out(wx.out, wx.manifest);
      fs::create_directories(spec.dir);
      cfg["out"] = spec.base;
      finish("policy-sweep", spec, comono::cli::run_policy_sweep(cfg, spec.dir, nthreads));
    } else if (diag->parsed()) {
      json cfg = est_config(df);
      if (diag->count("--grid-size")) cfg["grid_size"] = df.grid_size;
      cfg["source"] = dx.source;
      cfg["direction"] = dx.direction;
      cfg["full_range"] = dx.full_range;
      OutSpec spec = split_out(dx.out, dx.manifest);
      fs::create_directories(spec.dir);
      cfg["out"] = spec.base;
      finish("diagnose", spec, comono::cli::run_diagnose(cfg, spec.dir, nthreads));
    } else if (replay->parsed()) {
      json m = json::parse(comono::cli::read_file(rx.manifest));
      // Inputs must be the same bytes the original run saw.
      for (const auto& [role, entry] : m.at("inputs").items()) {
        std::string path = entry.at("path").get<std::string>();
        std::string digest = comono::cli::digest_file(path);
        if (digest != entry.at("digest").get<std::string>())
          comono::fail(comono::errc::io_error,
                       "input '" + path + "' changed since the manifest was written (" + digest +
                           " != " + entry.at("digest").get<std::string>() + ")");
      }
      fs::create_directories(rx.out_dir);
      HandlerResult result = comono::cli::dispatch(m.at("subcommand").get<std::string>(),
                                                   m.at("config"), rx.out_dir, nthreads);
      OutSpec spec;
      spec.dir = rx.out_dir;
      spec.manifest = (fs::path(rx.out_dir) / fs::path(rx.manifest).filename()).string();
      finish(m.at("subcommand").get<std::string>(), spec, result);
    }
  } catch (const comono::Error& e) {
    json err = {{"error", {{"code", comono::errc_name(e.code())}, {"message", e.what()}}}};
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return comono::errc_exit_code(e.code());
  } catch (const std::exception& e) {
    json err = {{"error", {{"code", "Internal"}, {"message", e.what()}}}};
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return 1;
  }
  return 0;
}
