#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "bnpirt/design.hpp"
#include "bnpirt/model.hpp"
#include "bnpirt/random.hpp"

namespace bnpirt {

/// Slice and assignment variables, one entry per design row. The slice
/// variable is kept in logs: u_slice = exp(log_u_slice) and the constraint
/// u_slice < xi_{|z|} reads log_u_slice < -|z|.
struct LatentState {
  std::vector<double> log_u_slice;
  std::vector<long> z;
  std::vector<double> u_star;
  std::vector<double> z_star;
  long n_max = 0;

  std::size_t size() const { return z.size(); }
  double u_slice(std::size_t k) const;
};

struct ChainConfig {
  long iterations = 62000;
  long burn_in = 2000;
  long thin = 5;
  std::uint64_t seed = 1;
  PriorConfig prior;
  double eps = kDefaultSeriesTolerance;

  void validate() const;
  /// floor((iterations - burn_in) / thin)
  long stored_draws() const;
};

struct SamplerStats {
  long slice_evaluations = 0;
  long slice_step_outs = 0;
  long slice_shrinks = 0;
  long location_extensions = 0;
  long jitter_events = 0;
  long max_n_max = 0;

  bool operator==(const SamplerStats&) const = default;
};

struct ChainSamples {
  std::vector<ParameterState> draws;
  ChainConfig config;
  std::vector<ColumnLabel> column_labels;
  SamplerStats stats;
};

/// xi_l = exp(-l).
double xi(long l);

/// Largest l with xi_l > min(u_slice).
long compute_n_max(std::span<const double> u_slice);
long n_max_from_log(double min_log_u_slice);

/// Gaussian full conditional of a linear model with Gram matrix X'X, prior
/// precision D (in units of the noise variance) and noise variance s2:
/// coefficients ~ N(A^{-1} X'y, s2 A^{-1}) with A = X'X + D. A is factored
/// once; only the right-hand side and the scale change between draws.
class ConjugateSystem {
 public:
  ConjugateSystem(const Eigen::MatrixXd& gram, const Eigen::VectorXd& prior_precision,
                  const std::vector<std::string>& column_names = {});

  int dimension() const { return dimension_; }
  Eigen::VectorXd mean(const Eigen::VectorXd& xty) const;
  Eigen::VectorXd draw(const Eigen::VectorXd& xty, double noise_variance, Rng& rng) const;
  bool jittered() const { return jittered_; }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  int dimension_ = 0;
  bool jittered_ = false;
};

// Single-site updates. Each mutates only the variable it is named after
// (plus on-demand growth of the location window).

void update_u_slice(LatentState& latent, Rng& rng);

void update_z(LatentState& latent, ParameterState& zeta, const ObservationDesign& design, Rng& rng,
              Rng& extension_rng, SamplerStats* stats = nullptr);

void update_u_star(LatentState& latent, const ParameterState& zeta, const ObservationDesign& design, Rng& rng);

void update_mu(ParameterState& zeta, const LatentState& latent, const ObservationDesign& design, Rng& rng);

/// Stepping-out slice sampler on (0, b_sigma_mu) with initial width b/10.
void update_sigma_mu(ParameterState& zeta, double b_sigma_mu, Rng& rng, SamplerStats* stats = nullptr);

void update_beta(ParameterState& zeta, const LatentState& latent, const ObservationDesign& design,
                 const ConjugateSystem& system, Rng& rng);

void update_sigma2(ParameterState& zeta, const LatentState& latent, const ObservationDesign& design,
                   const PriorConfig& prior, Rng& rng);

void update_z_star(LatentState& latent, const ParameterState& zeta, const ObservationDesign& design, Rng& rng);

void update_beta_omega(ParameterState& zeta, const LatentState& latent, const ObservationDesign& design,
                       const ConjugateSystem& system, Rng& rng);

void update_sigma_omega2(ParameterState& zeta, const LatentState& latent, const ObservationDesign& design,
                         const PriorConfig& prior, Rng& rng);

ConjugateSystem coefficient_system(const ObservationDesign& design, const PriorConfig& prior);
ConjugateSystem weight_coefficient_system(const ObservationDesign& design, const PriorConfig& prior);

/// Returns a description of the first violated latent invariant, if any.
std::optional<std::string> check_latent_invariants(const LatentState& latent, const ObservationDesign& design);

/// Owns one chain's state and substreams and runs full sweeps.
class GibbsSampler {
 public:
  GibbsSampler(const ObservationDesign& design, const ChainConfig& config);

  /// Starting state: beta = beta_omega = 0, sigma2 = sigma_omega2 = 1,
  /// sigma_mu = b/2, z = 0, mu_0 from its prior, uniform slices, one
  /// truncated-normal draw for u* and z*.
  void initialize();

  /// One pass over every update in the fixed order.
  void sweep();

  ParameterState& parameters() { return zeta_; }
  const ParameterState& parameters() const { return zeta_; }
  LatentState& latents() { return latent_; }
  const LatentState& latents() const { return latent_; }
  const SamplerStats& stats() const { return stats_; }
  Rng& stream(Stream s);

 private:
  void check_finite(long iteration, const char* stage) const;

  const ObservationDesign& design_;
  ChainConfig config_;
  ConjugateSystem beta_system_;
  ConjugateSystem omega_system_;
  ParameterState zeta_;
  LatentState latent_;
  SamplerStats stats_;
  std::vector<Rng> streams_;
  long iteration_ = 0;
};

using SweepObserver = std::function<void(long iteration, const LatentState&, const ParameterState&)>;

/// Runs burn-in plus sampling and keeps every thin-th post-burn-in draw.
ChainSamples run_chain(const ObservationDesign& design, const ChainConfig& config,
                       const SweepObserver& observer = {});

}  // namespace bnpirt
