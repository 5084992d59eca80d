#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <utility>

#include <json.hpp>

#include "comono/dataset.hpp"

namespace comono {

/// Deterministic linear treatment rule: treat iff coefs' x <= cutoff.
struct LinearRule {
  Eigen::VectorXd coefs;
  double cutoff = 0.0;
  int assign(const Eigen::VectorXd& x) const { return coefs.dot(x) <= cutoff ? 1 : 0; }
};

/// Closed-form ground truth attached to a generated sample, used as the
/// oracle in validation experiments.
struct SyntheticTruth {
  std::function<double(const Eigen::VectorXd&)> ey1, ey0, tau;
  std::function<double(double)> q0, q1;
  double q0_low = 0.0, q0_high = 0.0;  // domain of q0 (may be +-inf)
  double q1_low = 0.0, q1_high = 0.0;
  std::function<int(const Eigen::VectorXd&)> rule;
  nlohmann::json params;  // named parametric form for serialization
};

/// Two test scores on the unit square, treatment below a slanted line
/// (0.4 x1 + x2 <= 0.7), smooth conditional means that are strictly
/// increasing in a shared index (x1 + x2)/2 with contours crossing the
/// frontier non-tangentially, so transfer is possible for some but not all
/// points. Gaussian outcome noise.
std::pair<Dataset, SyntheticTruth> gen_expository(int n, std::uint64_t seed,
                                                  double noise_sd = 0.1);

/// Latent-skill model: jointly normal (reading, math) skills, test scores
/// equal to skill plus independent normal measurement error, potential
/// outcomes affine in the math skill. Conditional means of both arms are
/// strictly increasing in the index x_math + gamma * x_reading, hence
/// comonotone by construction.
struct SkillModelParams {
  double mu_r = 0.0, mu_m = 0.0;
  double sigma_r2 = 1.0, sigma_m2 = 1.0, sigma_rm = 0.95;
  double omega_r2 = 0.1, omega_m2 = 0.1;
  // potential skill maps zeta_d = a_d + b_d * xi_m + eta_d with b_d > 0
  double a0 = 0.0, b0 = 1.0;
  double a1 = 0.3, b1 = 0.8;
  double eta_sd = 0.05;          // skill-formation noise
  double score_noise_sd = 0.05;  // outcome measurement noise

  /// Index weight: gamma = sigma_rm * omega_m2 /
  /// (sigma_m2 * omega_r2 + sigma_m2 * sigma_r2 - sigma_rm^2).
  /// Positive iff sigma_rm is.
  double gamma() const;
  void validate() const;  // throws InvalidCovariance
};

/// Columns are (x1 = reading score, x2 = math score). Default rule when
/// rule.coefs is empty: treat iff math score <= mu_m.
std::pair<Dataset, SyntheticTruth> gen_skill_model(int n, const SkillModelParams& params,
                                                   LinearRule rule, std::uint64_t seed);

/// Simplest closed-form pair: E[Y(1)|X] = x1 + x2, E[Y(0)|X] = c (x1 + x2),
/// X uniform on the unit square, treated iff x1 <= 0.5. The transfer curve
/// is q0(y) = c y on [0.5, 1.5]. c = 1 gives a zero-effect sample; c < 0
/// violates comonotonicity by construction (diagnostic target).
std::pair<Dataset, SyntheticTruth> gen_linear_oracle(int n, double slope_ratio, double noise_sd,
                                                     std::uint64_t seed);

}  // namespace comono
