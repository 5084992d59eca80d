#pragma once

#include <string>
#include <string_view>

namespace comono {

enum class KernelFamily { uniform, triangular, epanechnikov, gaussian };

struct KernelSpec {
  KernelFamily family = KernelFamily::uniform;
};

/// Closed-form kernel constants: second moment, roughness (integral of K^2),
/// and the 0.75 quantile of the kernel viewed as a density.
struct KernelMoments {
  double mu2;
  double rk;
  double q75;
};

double kernel_eval(KernelSpec k, double u);

KernelMoments kernel_moments(KernelSpec k);

/// omega = 2 * q75. Default near-frontier radius is epsilon = omega * h.
double omega_rule(KernelSpec k);

/// Radius (in bandwidth units) of the neighborhood enumerated for a fit.
/// Compact kernels: 1. Gaussian: truncated at 4 (weight below 3.4e-4 outside).
double kernel_query_radius(KernelSpec k);

KernelSpec kernel_from_name(std::string_view name);
const char* kernel_name(KernelSpec k);

}  // namespace comono
