#include "comono/kernels.hpp"

#include <cmath>

#include "comono/errors.hpp"

namespace comono {

namespace {

constexpr double kPi = 3.141592653589793238462643383279503;

double gaussian_density(double u) {
  return std::exp(-0.5 * u * u) / std::sqrt(2.0 * kPi);
}

double gaussian_cdf(double u) { return 0.5 * (1.0 + std::erf(u / std::sqrt(2.0))); }

// Standard normal quantile by bisection on the CDF. Only evaluated once per
// kernel_moments call; accuracy ~1e-15.
double gaussian_quantile(double p) {
  double lo = -10.0, hi = 10.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (gaussian_cdf(mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double kernel_eval(KernelSpec k, double u) {
  double a = std::abs(u);
  switch (k.family) {
    case KernelFamily::uniform:
      return a <= 1.0 ? 0.5 : 0.0;
    case KernelFamily::triangular:
      return a < 1.0 ? 1.0 - a : 0.0;
    case KernelFamily::epanechnikov:
      return a < 1.0 ? 0.75 * (1.0 - a * a) : 0.0;
    case KernelFamily::gaussian:
      return gaussian_density(u);
  }
  return 0.0;
}

KernelMoments kernel_moments(KernelSpec k) {
  switch (k.family) {
    case KernelFamily::uniform:
      // CDF(u) = (u+1)/2 on [-1,1], so q75 = 0.5.
      return {1.0 / 3.0, 0.5, 0.5};
    case KernelFamily::triangular:
      // CDF(u) = 1/2 + u - u^2/2 for u in [0,1]; CDF(u) = 3/4 at u = 1 - sqrt(1/2).
      return {1.0 / 6.0, 2.0 / 3.0, 1.0 - std::sqrt(0.5)};
    case KernelFamily::epanechnikov:
      // q75 solves u^3 - 3u + 1 = 0 on (0,1): u = 2 cos(4*pi/9).
      return {0.2, 0.6, 2.0 * std::cos(4.0 * kPi / 9.0)};
    case KernelFamily::gaussian:
      return {1.0, 1.0 / (2.0 * std::sqrt(kPi)), gaussian_quantile(0.75)};
  }
  fail(errc::invalid_argument, "unknown kernel family");
}

double omega_rule(KernelSpec k) { return 2.0 * kernel_moments(k).q75; }

double kernel_query_radius(KernelSpec k) {
  return k.family == KernelFamily::gaussian ? 4.0 : 1.0;
}

KernelSpec kernel_from_name(std::string_view name) {
  if (name == "uniform") return {KernelFamily::uniform};
  if (name == "triangular") return {KernelFamily::triangular};
  if (name == "epanechnikov") return {KernelFamily::epanechnikov};
  if (name == "gaussian") return {KernelFamily::gaussian};
  fail(errc::invalid_argument, "unknown kernel '" + std::string(name) + "'");
}

const char* kernel_name(KernelSpec k) {
  switch (k.family) {
    case KernelFamily::uniform: return "uniform";
    case KernelFamily::triangular: return "triangular";
    case KernelFamily::epanechnikov: return "epanechnikov";
    case KernelFamily::gaussian: return "gaussian";
  }
  return "unknown";
}

}  // namespace comono
