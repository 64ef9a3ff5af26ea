#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace bnpirt {

/// Named substreams of a chain. Each update type draws from its own stream so
/// that reordering or parallelizing one update never perturbs another.
enum class Stream : std::uint64_t {
  kInit = 1,
  kSlice,
  kAssignment,
  kLatentResponse,
  kLocations,
  kLocationScale,
  kCoefficients,
  kKernelVariance,
  kLatentWeight,
  kWeightCoefficients,
  kWeightVariance,
  kPredictive,
  kSimulate,
};

/// SplitMix64 finalizer; used to derive substream seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

/// Pseudo-random source with a pinned engine (mt19937_64) and distribution
/// code implemented here, so draws are identical across standard libraries.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}
  Rng(std::uint64_t master_seed, Stream stream, std::uint64_t index = 0)
      : engine_(mix_seed(mix_seed(master_seed, static_cast<std::uint64_t>(stream)), index)) {}

  static constexpr result_type min() { return std::numeric_limits<result_type>::min(); }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  double exponential(double rate);
  /// Gamma with unit scale (Marsaglia-Tsang).
  double gamma(double shape);
  /// Inverse-gamma IG(shape, rate), density proportional to x^{-shape-1} exp(-rate/x).
  double inverse_gamma(double shape, double rate) { return rate / gamma(shape); }

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Draw from N(mean, sd^2) restricted to (lo, hi). Either bound may be
/// infinite. Inverse-cdf in the body; exponential rejection when the region
/// lies more than five standard deviations out.
double truncated_normal(Rng& rng, double mean, double sd, double lo, double hi);

}  // namespace bnpirt
