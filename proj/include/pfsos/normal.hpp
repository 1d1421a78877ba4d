#pragma once

namespace pfsos {

/// Standard normal density.
double norm_pdf(double x);

/// Standard normal CDF.
double norm_cdf(double x);

/// Upper tail 1 - Phi(x), accurate far into the tail.
double norm_sf(double x);

/// Quantile function. Returns -inf for p <= 0 and +inf for p >= 1.
double norm_quantile(double p);

}  // namespace pfsos
