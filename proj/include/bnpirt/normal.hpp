#pragma once

namespace bnpirt::normal {

/// Standard normal cdf, computed from the complementary error function.
double cdf(double x);

/// Upper tail 1 - cdf(x) without cancellation for large x.
double ccdf(double x);

/// Mass of the standard normal on (a, b], evaluated on whichever tail keeps
/// the difference well conditioned.
double interval_mass(double a, double b);

/// log ccdf(x), finite far past the point where ccdf underflows.
double log_ccdf(double x);
double log_cdf(double x);

/// log of interval_mass(a, b); -inf only for empty intervals.
double log_interval_mass(double a, double b);

double pdf(double x);
double log_pdf(double x, double mean, double variance);

/// Inverse of cdf on (0, 1).
double quantile(double p);

/// Inverse of ccdf on (0, 1); accurate when q is tiny.
double upper_quantile(double q);

}  // namespace bnpirt::normal
