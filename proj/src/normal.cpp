#include "bnpirt/normal.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

namespace bnpirt::normal {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
}  // namespace

double cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double ccdf(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

double interval_mass(double a, double b) {
  if (!(b > a)) return 0.0;
  if (a >= 0.0) return ccdf(a) - ccdf(b);
  if (b <= 0.0) return cdf(b) - cdf(a);
  return 1.0 - cdf(a) - ccdf(b);
}

double log_ccdf(double x) {
  if (x < 30.0) return std::log(ccdf(x));
  // Asymptotic series of the Mills ratio; relative error below 1e-14 here.
  const double r = 1.0 / (x * x);
  const double series = 1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r)));
  return -0.5 * x * x - std::log(x) - kLogSqrt2Pi + std::log(series);
}

double log_cdf(double x) { return log_ccdf(-x); }

double log_interval_mass(double a, double b) {
  if (!(b > a)) return -HUGE_VAL;
  if (a >= 0.0) {
    const double la = log_ccdf(a), lb = log_ccdf(b);
    return la + std::log1p(-std::exp(lb - la));
  }
  if (b <= 0.0) {
    const double la = log_cdf(a), lb = log_cdf(b);
    return lb + std::log1p(-std::exp(la - lb));
  }
  return std::log(interval_mass(a, b));
}

double pdf(double x) { return std::exp(-0.5 * x * x - kLogSqrt2Pi); }

double log_pdf(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * d * d / variance - 0.5 * std::log(variance) - kLogSqrt2Pi;
}

double quantile(double p) {
  if (p <= 0.0) return -HUGE_VAL;
  if (p >= 1.0) return HUGE_VAL;
  if (p > 0.5) return upper_quantile(1.0 - p);
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double upper_quantile(double q) {
  if (q <= 0.0) return HUGE_VAL;
  if (q >= 1.0) return -HUGE_VAL;
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q);
}

}  // namespace bnpirt::normal
