#pragma once

#include <vector>

#include <Eigen/Dense>

#include "bnpirt/design.hpp"
#include "bnpirt/random.hpp"

namespace bnpirt {

/// Hyperparameters (b_sigma_mu, v, a0, v_omega, a_omega).
struct PriorConfig {
  double b_sigma_mu = 1.0;
  double v = 10.0;
  double a0 = 1000.0;
  double v_omega = 1.0;
  double a_omega = 0.01;

  void validate() const;
  bool operator==(const PriorConfig&) const = default;
};

/// Mixture locations mu_j on the symmetric window [-J, J]. The window only
/// grows; new locations are drawn from N(0, sigma_mu^2) one ring at a time
/// (mu_{-(J+1)} then mu_{J+1}), so a given stream always yields the same
/// value for a given j no matter how far a single call extends.
class LocationWindow {
 public:
  LocationWindow() : values_{0.0} {}
  /// `values` lists mu_{-J}..mu_{J}; its length must be odd.
  explicit LocationWindow(std::vector<double> values);

  int half_width() const { return static_cast<int>(values_.size() / 2); }
  bool contains(long j) const { return j >= -half_width() && j <= half_width(); }
  double operator[](long j) const { return values_[static_cast<std::size_t>(j + half_width())]; }
  double& operator[](long j) { return values_[static_cast<std::size_t>(j + half_width())]; }
  const std::vector<double>& values() const { return values_; }

  /// Grows the window until it contains j.
  void extend_to(long j, double sigma_mu, Rng& rng);

  bool operator==(const LocationWindow&) const = default;

 private:
  std::vector<double> values_;
};

/// One realization of (mu, sigma_mu, beta, beta_omega, sigma^2, sigma_omega^2).
struct ParameterState {
  LocationWindow mu;
  double sigma_mu = 0.5;
  Eigen::VectorXd beta;
  Eigen::VectorXd beta_omega;
  double sigma2 = 1.0;
  double sigma_omega2 = 1.0;

  ParameterState() = default;
  explicit ParameterState(int dimension)
      : beta(Eigen::VectorXd::Zero(dimension)), beta_omega(Eigen::VectorXd::Zero(dimension)) {}

  int dimension() const { return static_cast<int>(beta.size()); }
  double sigma() const;
  double sigma_omega() const;
  /// Throws std::invalid_argument naming the violated invariant.
  void validate(const PriorConfig* prior = nullptr) const;
};

struct MixtureWeightVector {
  long j_lo = 0;
  long j_hi = 0;
  std::vector<double> weights;  // weights[k] is omega_{j_lo + k}
  double tail_mass = 0.0;

  double sum() const;
  double at(long j) const { return weights[static_cast<std::size_t>(j - j_lo)]; }
};

struct LatentMoments {
  double mean = 0.0;
  double variance = 0.0;
};

inline constexpr double kDefaultSeriesTolerance = 1e-10;

/// Ordered-probit cell probability Phi((j - eta)/s) - Phi((j - 1 - eta)/s).
double mixture_weight(long j, double eta, double sigma_omega);

/// Every j in [floor(eta - z s), ceil(eta + z s)] with z the 1 - eps/2
/// standard-normal quantile.
MixtureWeightVector weight_window(double eta, double sigma_omega, double eps = kDefaultSeriesTolerance);

/// Extends zeta.mu so that it covers the weight window for latent weight
/// mean `eta`.
void cover_weight_window(ParameterState& zeta, double eta, double eps, Rng& rng);

/// Pr(U = 1 | x) from the linear predictors x'beta and x'beta_omega. Throws
/// std::out_of_range when zeta.mu does not cover the weight window.
double response_probability_from_predictors(double x_beta, double eta, const ParameterState& zeta,
                                            double eps = kDefaultSeriesTolerance);

double response_probability(const Eigen::VectorXd& x, const ParameterState& zeta,
                            double eps = kDefaultSeriesTolerance);
/// Same, extending zeta.mu from its prior when the window is too narrow.
double response_probability(const Eigen::VectorXd& x, ParameterState& zeta, double eps, Rng& rng);

double observation_pmf(int u, const Eigen::VectorXd& x, const ParameterState& zeta,
                       double eps = kDefaultSeriesTolerance);
double observation_pmf(int u, const Eigen::VectorXd& x, ParameterState& zeta, double eps, Rng& rng);

/// Sum of log observation_pmf over the design rows.
double data_log_likelihood(const ObservationDesign& design, const ParameterState& zeta,
                           double eps = kDefaultSeriesTolerance);
double data_log_likelihood(const ObservationDesign& design, ParameterState& zeta, double eps, Rng& rng);

/// Mean and variance of the latent U* mixture at x.
LatentMoments latent_moments(const Eigen::VectorXd& x, const ParameterState& zeta,
                             double eps = kDefaultSeriesTolerance);

/// Log prior density over the materialized parameters. The intercept has a
/// flat prior and contributes nothing.
double log_prior_density(const ParameterState& zeta, const PriorConfig& prior);

double log_inverse_gamma_density(double x, double shape, double rate);

/// Probability clamped to [1e-300, 1 - 1e-16] for logs.
double clamp_probability(double p);

}  // namespace bnpirt
