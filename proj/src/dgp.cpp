#include "comono/dgp.hpp"

#include <cmath>
#include <limits>

#include "comono/errors.hpp"
#include "comono/rng.hpp"

namespace comono {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Expository conditional means: strictly increasing in u = (x1 + x2)/2 on
// [0, 1], quadratic so the transfer curve is curved but monotone.
double m1_of(double u) { return 0.3 + 0.9 * u - 0.2 * u * u; }
double m0_of(double u) { return 0.1 + 0.7 * u + 0.2 * u * u; }
double m1_inv(double y) { return (0.9 - std::sqrt(0.81 - 0.8 * (y - 0.3))) / 0.4; }
double m0_inv(double y) { return (-0.7 + std::sqrt(0.41 + 0.8 * y)) / 0.4; }

}  // namespace

std::pair<Dataset, SyntheticTruth> gen_expository(int n, std::uint64_t seed, double noise_sd) {
  if (n < 1) fail(errc::invalid_argument, "n must be at least 1");
  if (!(noise_sd >= 0.0)) fail(errc::invalid_argument, "noise sd must be nonnegative");

  LinearRule rule{Eigen::Vector2d(0.4, 1.0), 0.7};
  Rng rng(seed);
  Eigen::VectorXd y(n);
  Eigen::VectorXi d(n);
  Eigen::MatrixXd x(n, 2);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = rng.uniform();
    x(i, 1) = rng.uniform();
    double z = rng.normal();
    int di = rule.assign(x.row(i).transpose());
    double u = 0.5 * (x(i, 0) + x(i, 1));
    d[i] = di;
    y[i] = (di == 1 ? m1_of(u) : m0_of(u)) + noise_sd * z;
  }

  SyntheticTruth truth;
  truth.ey1 = [](const Eigen::VectorXd& p) { return m1_of(0.5 * (p[0] + p[1])); };
  truth.ey0 = [](const Eigen::VectorXd& p) { return m0_of(0.5 * (p[0] + p[1])); };
  truth.tau = [](const Eigen::VectorXd& p) {
    double u = 0.5 * (p[0] + p[1]);
    return m1_of(u) - m0_of(u);
  };
  truth.q0 = [](double y0) { return m0_of(m1_inv(y0)); };
  truth.q1 = [](double y0) { return m1_of(m0_inv(y0)); };
  // Frontier x2 = 0.7 - 0.4 x1 over x1 in [0,1] puts u in [0.35, 0.65].
  truth.q0_low = m1_of(0.35);
  truth.q0_high = m1_of(0.65);
  truth.q1_low = m0_of(0.35);
  truth.q1_high = m0_of(0.65);
  truth.rule = [rule](const Eigen::VectorXd& p) { return rule.assign(p); };
  truth.params = {
      {"dgp", "expository"},
      {"noise_sd", noise_sd},
      {"rule", {{"coefs", {0.4, 1.0}}, {"cutoff", 0.7}}},
      {"means",
       {{"index", "(x1+x2)/2"},
        {"treated", "0.3 + 0.9u - 0.2u^2"},
        {"untreated", "0.1 + 0.7u + 0.2u^2"}}},
      {"q0_domain", {truth.q0_low, truth.q0_high}},
  };

  return {Dataset::make(std::move(y), std::move(d), std::move(x), {"x1", "x2"}),
          std::move(truth)};
}

double SkillModelParams::gamma() const {
  return sigma_rm * omega_m2 / (sigma_m2 * omega_r2 + sigma_m2 * sigma_r2 - sigma_rm * sigma_rm);
}

void SkillModelParams::validate() const {
  if (!(sigma_r2 > 0.0 && sigma_m2 > 0.0) ||
      !(sigma_r2 * sigma_m2 - sigma_rm * sigma_rm > 0.0))
    fail(errc::invalid_covariance, "skill covariance matrix must be strictly positive definite");
  if (!(omega_r2 > 0.0 && omega_m2 > 0.0))
    fail(errc::invalid_covariance, "measurement noise variances must be strictly positive");
  if (!(b0 > 0.0 && b1 > 0.0))
    fail(errc::invalid_argument, "skill maps must be strictly increasing (b0, b1 > 0)");
  if (!(eta_sd >= 0.0 && score_noise_sd >= 0.0))
    fail(errc::invalid_argument, "noise scales must be nonnegative");
}

std::pair<Dataset, SyntheticTruth> gen_skill_model(int n, const SkillModelParams& params,
                                                   LinearRule rule, std::uint64_t seed) {
  if (n < 1) fail(errc::invalid_argument, "n must be at least 1");
  params.validate();
  if (rule.coefs.size() == 0) rule = LinearRule{Eigen::Vector2d(0.0, 1.0), params.mu_m};
  if (rule.coefs.size() != 2) fail(errc::invalid_argument, "skill-model rule needs 2 coefficients");

  // Cholesky of the 2x2 skill covariance.
  double lr = std::sqrt(params.sigma_r2);
  double lmr = params.sigma_rm / lr;
  double lm = std::sqrt(params.sigma_m2 - lmr * lmr);
  double wr = std::sqrt(params.omega_r2);
  double wm = std::sqrt(params.omega_m2);

  Rng rng(seed);
  Eigen::VectorXd y(n);
  Eigen::VectorXi d(n);
  Eigen::MatrixXd x(n, 2);
  for (int i = 0; i < n; ++i) {
    double z1 = rng.normal(), z2 = rng.normal();
    double xi_r = params.mu_r + lr * z1;
    double xi_m = params.mu_m + lmr * z1 + lm * z2;
    x(i, 0) = xi_r + wr * rng.normal();
    x(i, 1) = xi_m + wm * rng.normal();
    double eta0 = params.eta_sd * rng.normal();
    double eta1 = params.eta_sd * rng.normal();
    double nu = params.score_noise_sd * rng.normal();
    int di = rule.assign(x.row(i).transpose());
    double zeta = di == 1 ? params.a1 + params.b1 * xi_m + eta1
                          : params.a0 + params.b0 * xi_m + eta0;
    d[i] = di;
    y[i] = zeta + nu;
  }

  // Posterior mean of the math skill given both scores; the conditional mean
  // outcome under either arm is affine in it.
  double det = (params.sigma_r2 + params.omega_r2) * (params.sigma_m2 + params.omega_m2) -
               params.sigma_rm * params.sigma_rm;
  double km = (params.sigma_m2 * (params.sigma_r2 + params.omega_r2) -
               params.sigma_rm * params.sigma_rm) /
              det;
  double kr = params.sigma_rm * params.omega_m2 / det;
  auto skill_mean = [p = params, km, kr](const Eigen::VectorXd& v) {
    return p.mu_m + km * (v[1] - p.mu_m) + kr * (v[0] - p.mu_r);
  };

  SyntheticTruth truth;
  truth.ey1 = [p = params, skill_mean](const Eigen::VectorXd& v) {
    return p.a1 + p.b1 * skill_mean(v);
  };
  truth.ey0 = [p = params, skill_mean](const Eigen::VectorXd& v) {
    return p.a0 + p.b0 * skill_mean(v);
  };
  truth.tau = [p = params, skill_mean](const Eigen::VectorXd& v) {
    return (p.a1 - p.a0) + (p.b1 - p.b0) * skill_mean(v);
  };
  truth.q0 = [p = params](double y1) { return p.a0 + p.b0 * (y1 - p.a1) / p.b1; };
  truth.q1 = [p = params](double y0) { return p.a1 + p.b1 * (y0 - p.a0) / p.b0; };
  // The frontier line is unbounded in score space; unless it follows an
  // index contour the conditional means traverse the whole real line on it.
  double gamma = params.gamma();
  bool contour_rule = std::abs(rule.coefs[0] * 1.0 - rule.coefs[1] * gamma) <
                      1e-14 * (std::abs(rule.coefs[0]) + std::abs(rule.coefs[1]));
  if (contour_rule) {
    // Degenerate: conditional means are constant along the frontier.
    Eigen::Vector2d probe = rule.coefs / rule.coefs.squaredNorm() * rule.cutoff;
    double y1 = truth.ey1(probe);
    double y0 = truth.ey0(probe);
    truth.q0_low = truth.q0_high = y1;
    truth.q1_low = truth.q1_high = y0;
  } else {
    truth.q0_low = truth.q1_low = -kInf;
    truth.q0_high = truth.q1_high = kInf;
  }
  truth.rule = [rule](const Eigen::VectorXd& v) { return rule.assign(v); };
  truth.params = {
      {"dgp", "skill"},
      {"mu", {params.mu_r, params.mu_m}},
      {"sigma", {{"r2", params.sigma_r2}, {"m2", params.sigma_m2}, {"rm", params.sigma_rm}}},
      {"omega", {{"r2", params.omega_r2}, {"m2", params.omega_m2}}},
      {"arms", {{"a0", params.a0}, {"b0", params.b0}, {"a1", params.a1}, {"b1", params.b1}}},
      {"eta_sd", params.eta_sd},
      {"score_noise_sd", params.score_noise_sd},
      {"gamma", gamma},
      {"rule", {{"coefs", {rule.coefs[0], rule.coefs[1]}}, {"cutoff", rule.cutoff}}},
  };

  return {Dataset::make(std::move(y), std::move(d), std::move(x), {"x1", "x2"}),
          std::move(truth)};
}

std::pair<Dataset, SyntheticTruth> gen_linear_oracle(int n, double slope_ratio, double noise_sd,
                                                     std::uint64_t seed) {
  if (n < 1) fail(errc::invalid_argument, "n must be at least 1");
  if (slope_ratio == 0.0) fail(errc::invalid_argument, "slope ratio must be nonzero");
  if (!(noise_sd >= 0.0)) fail(errc::invalid_argument, "noise sd must be nonnegative");

  LinearRule rule{Eigen::Vector2d(1.0, 0.0), 0.5};
  Rng rng(seed);
  Eigen::VectorXd y(n);
  Eigen::VectorXi d(n);
  Eigen::MatrixXd x(n, 2);
  const double c = slope_ratio;
  for (int i = 0; i < n; ++i) {
    x(i, 0) = rng.uniform();
    x(i, 1) = rng.uniform();
    double z = rng.normal();
    int di = rule.assign(x.row(i).transpose());
    double s = x(i, 0) + x(i, 1);
    d[i] = di;
    y[i] = (di == 1 ? s : c * s) + noise_sd * z;
  }

  SyntheticTruth truth;
  truth.ey1 = [](const Eigen::VectorXd& p) { return p[0] + p[1]; };
  truth.ey0 = [c](const Eigen::VectorXd& p) { return c * (p[0] + p[1]); };
  truth.tau = [c](const Eigen::VectorXd& p) { return (1.0 - c) * (p[0] + p[1]); };
  truth.q0 = [c](double y1) { return c * y1; };
  truth.q1 = [c](double y0) { return y0 / c; };
  // Frontier x1 = 0.5, x2 in [0,1]: treated means span [0.5, 1.5] there.
  truth.q0_low = 0.5;
  truth.q0_high = 1.5;
  truth.q1_low = std::min(0.5 * c, 1.5 * c);
  truth.q1_high = std::max(0.5 * c, 1.5 * c);
  truth.rule = [rule](const Eigen::VectorXd& p) { return rule.assign(p); };
  truth.params = {
      {"dgp", "linear_oracle"},
      {"slope_ratio", c},
      {"noise_sd", noise_sd},
      {"rule", {{"coefs", {1.0, 0.0}}, {"cutoff", 0.5}}},
      {"q0", {{"form", "affine"}, {"intercept", 0.0}, {"slope", c}, {"domain", {0.5, 1.5}}}},
  };

  return {Dataset::make(std::move(y), std::move(d), std::move(x), {"x1", "x2"}),
          std::move(truth)};
}

}  // namespace comono
