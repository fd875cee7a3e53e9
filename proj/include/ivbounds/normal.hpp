#pragma once

namespace ivb {

double normal_cdf(double x) noexcept;

/// Inverse standard normal CDF (Wichura's AS241, about 1e-16 relative
/// accuracy). Requires 0 < p < 1.
double normal_quantile(double p);

/// Two-sided critical value z_{1 - delta/2}.
double normal_critical(double delta);

}  // namespace ivb
