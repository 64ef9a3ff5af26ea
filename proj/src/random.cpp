#include "bnpirt/random.hpp"

#include <cmath>
#include <stdexcept>

#include "bnpirt/normal.hpp"

namespace bnpirt {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  // (k + 0.5) / 2^53 never hits 0 or 1.
  const std::uint64_t k = engine_() >> 11;
  return (static_cast<double>(k) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = v * f;
  has_spare_ = true;
  return u * f;
}

double Rng::exponential(double rate) { return -std::log(uniform()) / rate; }

double Rng::gamma(double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("gamma shape must be positive");
  if (shape < 1.0) {
    // Gamma(a) = Gamma(a + 1) * U^{1/a}, in logs to survive tiny shapes.
    const double g = gamma(shape + 1.0);
    return std::exp(std::log(g) + std::log(uniform()) / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

namespace {

constexpr double kTailThreshold = 5.0;

// Standard normal restricted to (a, b) with a >= kTailThreshold: truncated
// exponential proposal with Robert's rate, accepted w.p. exp(-(x - rate)^2 / 2).
double right_tail(Rng& rng, double a, double b) {
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  const double span = b - a;
  const double keep = std::isfinite(span) ? -std::expm1(-rate * span) : 1.0;
  for (;;) {
    const double x = a - std::log1p(-rng.uniform() * keep) / rate;
    if (!(x < b) || !(x > a)) continue;
    const double d = x - rate;
    if (rng.uniform() <= std::exp(-0.5 * d * d)) return x;
  }
}

double standard_truncated(Rng& rng, double a, double b) {
  if (a >= kTailThreshold) return right_tail(rng, a, b);
  if (b <= -kTailThreshold) return -right_tail(rng, -b, -a);
  const double u = rng.uniform();
  double x;
  if (a >= 0.0) {
    const double qa = normal::ccdf(a), qb = normal::ccdf(b);
    x = normal::upper_quantile(qb + u * (qa - qb));
  } else if (b <= 0.0) {
    const double pa = normal::cdf(a), pb = normal::cdf(b);
    x = normal::quantile(pa + u * (pb - pa));
  } else {
    const double pa = normal::cdf(a), pb = normal::cdf(b);
    x = normal::quantile(pa + u * (pb - pa));
  }
  // Rounding in the quantile may land on a bound; clamp strictly inside.
  if (!(x > a)) x = std::nextafter(a, b);
  if (!(x < b)) x = std::nextafter(b, a);
  return x;
}

}  // namespace

double truncated_normal(Rng& rng, double mean, double sd, double lo, double hi) {
  if (!(sd > 0.0)) throw std::invalid_argument("truncated_normal: sd must be positive");
  if (!(hi > lo)) throw std::invalid_argument("truncated_normal: empty interval");
  const double a = (lo - mean) / sd;
  const double b = (hi - mean) / sd;
  double x = mean + sd * standard_truncated(rng, a, b);
  if (!(x > lo)) x = std::nextafter(lo, hi);
  if (!(x < hi)) x = std::nextafter(hi, lo);
  return x;
}

}  // namespace bnpirt
