#include "bnpirt/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "bnpirt/errors.hpp"
#include "bnpirt/normal.hpp"

namespace bnpirt {

namespace {

// Largest weight window we are willing to materialize; beyond this sigma_omega
// is effectively infinite relative to the unit cell width.
constexpr double kMaxWindowCells = 1 << 22;

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw std::invalid_argument(std::string(name) + " must be positive and finite");
}

}  // namespace

void PriorConfig::validate() const {
  require_positive(b_sigma_mu, "b_sigma_mu");
  require_positive(v, "v");
  require_positive(a0, "a0");
  require_positive(v_omega, "v_omega");
  require_positive(a_omega, "a_omega");
}

LocationWindow::LocationWindow(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() % 2 != 1) throw std::invalid_argument("location window must have odd length");
}

void LocationWindow::extend_to(long j, double sigma_mu, Rng& rng) {
  const long target = std::labs(j);
  if (target <= half_width()) return;
  if (target > static_cast<long>(kMaxWindowCells))
    throw NumericalError("location index " + std::to_string(j) + " exceeds the supported window");
  std::vector<double> grown(static_cast<std::size_t>(2 * target + 1));
  const long old_j = half_width();
  std::vector<double> left, right;
  for (long ring = old_j + 1; ring <= target; ++ring) {
    left.push_back(rng.normal(0.0, sigma_mu));
    right.push_back(rng.normal(0.0, sigma_mu));
  }
  // grown[k] holds mu_{k - target}
  for (long r = 0; r < target - old_j; ++r) {
    grown[static_cast<std::size_t>(target - (old_j + 1 + r))] = left[r];
    grown[static_cast<std::size_t>(target + old_j + 1 + r)] = right[r];
  }
  for (long k = -old_j; k <= old_j; ++k) grown[static_cast<std::size_t>(k + target)] = (*this)[k];
  values_ = std::move(grown);
}

double ParameterState::sigma() const { return std::sqrt(sigma2); }
double ParameterState::sigma_omega() const { return std::sqrt(sigma_omega2); }

void ParameterState::validate(const PriorConfig* prior) const {
  if (!(sigma_mu > 0.0)) throw std::invalid_argument("sigma_mu must be positive");
  if (prior && sigma_mu > prior->b_sigma_mu) throw std::invalid_argument("sigma_mu exceeds b_sigma_mu");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
  if (!(sigma_omega2 > 0.0)) throw std::invalid_argument("sigma_omega2 must be positive");
  if (beta.size() != beta_omega.size()) throw std::invalid_argument("beta and beta_omega differ in length");
}

double MixtureWeightVector::sum() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

double mixture_weight(long j, double eta, double sigma_omega) {
  if (!(sigma_omega > 0.0)) throw std::invalid_argument("mixture_weight: sigma_omega must be positive");
  const double shift = static_cast<double>(j) - eta;
  return normal::interval_mass((shift - 1.0) / sigma_omega, shift / sigma_omega);
}

MixtureWeightVector weight_window(double eta, double sigma_omega, double eps) {
  if (!(sigma_omega > 0.0)) throw std::invalid_argument("weight_window: sigma_omega must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("weight_window: eps must lie in (0, 1)");
  if (!std::isfinite(eta)) throw NumericalError("weight_window: non-finite latent mean");
  const double z = normal::upper_quantile(0.5 * eps);
  const double lo = std::floor(eta - z * sigma_omega);
  const double hi = std::ceil(eta + z * sigma_omega);
  if (hi - lo > kMaxWindowCells || std::fabs(lo) > 1e15 || std::fabs(hi) > 1e15)
    throw NumericalError("weight_window: sigma_omega=" + std::to_string(sigma_omega) + ", eta=" +
                         std::to_string(eta) + " spreads the mixture over too many cells");

  MixtureWeightVector w;
  w.j_lo = static_cast<long>(lo);
  w.j_hi = static_cast<long>(hi);
  const auto n = static_cast<std::size_t>(w.j_hi - w.j_lo + 1);
  w.weights.resize(n);
  // Boundary k sits at (j_lo - 1 + k - eta) / s; keep both tails to avoid
  // cancellation on either side of the mean.
  double prev_t = (static_cast<double>(w.j_lo) - 1.0 - eta) / sigma_omega;
  double prev_lower = normal::cdf(prev_t), prev_upper = normal::ccdf(prev_t);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = (static_cast<double>(w.j_lo + static_cast<long>(k)) - eta) / sigma_omega;
    const double lower = normal::cdf(t), upper = normal::ccdf(t);
    double mass;
    if (prev_t >= 0.0) mass = prev_upper - upper;
    else if (t <= 0.0) mass = lower - prev_lower;
    else mass = 1.0 - prev_lower - upper;
    w.weights[k] = std::clamp(mass, 0.0, 1.0);
    prev_t = t;
    prev_lower = lower;
    prev_upper = upper;
  }
  w.tail_mass = 1.0 - w.sum();
  return w;
}

void cover_weight_window(ParameterState& zeta, double eta, double eps, Rng& rng) {
  const auto w = weight_window(eta, zeta.sigma_omega(), eps);
  zeta.mu.extend_to(std::max(std::labs(w.j_lo), std::labs(w.j_hi)), zeta.sigma_mu, rng);
}

double clamp_probability(double p) { return std::clamp(p, 1e-300, 1.0 - 1e-16); }

double response_probability_from_predictors(double x_beta, double eta, const ParameterState& zeta, double eps) {
  const auto w = weight_window(eta, zeta.sigma_omega(), eps);
  if (!zeta.mu.contains(w.j_lo) || !zeta.mu.contains(w.j_hi))
    throw std::out_of_range("location window [-" + std::to_string(zeta.mu.half_width()) + ", " +
                            std::to_string(zeta.mu.half_width()) + "] does not cover weights on [" +
                            std::to_string(w.j_lo) + ", " + std::to_string(w.j_hi) + "]");
  const double sigma = zeta.sigma();
  double above = 0.0, total = 0.0;
  for (long j = w.j_lo; j <= w.j_hi; ++j) {
    const double omega = w.at(j);
    if (omega == 0.0) continue;
    above += omega * normal::cdf((zeta.mu[j] + x_beta) / sigma);
    total += omega;
  }
  // Renormalize over the captured cells.
  return clamp_probability(above / total);
}

namespace {

void check_dimension(const Eigen::VectorXd& x, const ParameterState& zeta) {
  if (x.size() != zeta.beta.size() || x.size() != zeta.beta_omega.size())
    throw std::invalid_argument("design vector has length " + std::to_string(x.size()) + ", parameters have " +
                                std::to_string(zeta.beta.size()));
}

void check_response(int u) {
  if (u != 0 && u != 1) throw std::invalid_argument("response must be 0 or 1, got " + std::to_string(u));
}

}  // namespace

double response_probability(const Eigen::VectorXd& x, const ParameterState& zeta, double eps) {
  check_dimension(x, zeta);
  return response_probability_from_predictors(x.dot(zeta.beta), x.dot(zeta.beta_omega), zeta, eps);
}

double response_probability(const Eigen::VectorXd& x, ParameterState& zeta, double eps, Rng& rng) {
  check_dimension(x, zeta);
  cover_weight_window(zeta, x.dot(zeta.beta_omega), eps, rng);
  return response_probability(x, static_cast<const ParameterState&>(zeta), eps);
}

double observation_pmf(int u, const Eigen::VectorXd& x, const ParameterState& zeta, double eps) {
  check_response(u);
  const double p = response_probability(x, zeta, eps);
  return u == 1 ? p : 1.0 - p;
}

double observation_pmf(int u, const Eigen::VectorXd& x, ParameterState& zeta, double eps, Rng& rng) {
  check_response(u);
  const double p = response_probability(x, zeta, eps, rng);
  return u == 1 ? p : 1.0 - p;
}

double data_log_likelihood(const ObservationDesign& design, const ParameterState& zeta, double eps) {
  if (design.empty()) throw std::invalid_argument("data_log_likelihood: empty design");
  if (design.dimension() != zeta.dimension()) throw std::invalid_argument("data_log_likelihood: dimension mismatch");
  const Eigen::VectorXd x_beta = design.x * zeta.beta;
  const Eigen::VectorXd eta = design.x * zeta.beta_omega;
  double total = 0.0;
  for (std::size_t k = 0; k < design.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    const double p = response_probability_from_predictors(x_beta[r], eta[r], zeta, eps);
    total += std::log(clamp_probability(design.rows[k].response == 1 ? p : 1.0 - p));
  }
  return total;
}

double data_log_likelihood(const ObservationDesign& design, ParameterState& zeta, double eps, Rng& rng) {
  if (design.dimension() != zeta.dimension()) throw std::invalid_argument("data_log_likelihood: dimension mismatch");
  const Eigen::VectorXd eta = design.x * zeta.beta_omega;
  if (eta.size() > 0) {
    cover_weight_window(zeta, eta.minCoeff(), eps, rng);
    cover_weight_window(zeta, eta.maxCoeff(), eps, rng);
  }
  return data_log_likelihood(design, static_cast<const ParameterState&>(zeta), eps);
}

LatentMoments latent_moments(const Eigen::VectorXd& x, const ParameterState& zeta, double eps) {
  check_dimension(x, zeta);
  const double x_beta = x.dot(zeta.beta);
  const auto w = weight_window(x.dot(zeta.beta_omega), zeta.sigma_omega(), eps);
  if (!zeta.mu.contains(w.j_lo) || !zeta.mu.contains(w.j_hi))
    throw std::out_of_range("latent_moments: location window does not cover the weight window");
  const double total = w.sum();
  double mean = 0.0;
  for (long j = w.j_lo; j <= w.j_hi; ++j) mean += (zeta.mu[j] + x_beta) * w.at(j);
  mean /= total;
  double spread = 0.0;
  for (long j = w.j_lo; j <= w.j_hi; ++j) {
    const double d = zeta.mu[j] + x_beta - mean;
    spread += d * d * w.at(j);
  }
  return {mean, zeta.sigma2 + spread / total};
}

double log_inverse_gamma_density(double x, double shape, double rate) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(rate) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - rate / x;
}

double log_prior_density(const ParameterState& zeta, const PriorConfig& prior) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (!(zeta.sigma_mu > 0.0) || zeta.sigma_mu > prior.b_sigma_mu) return kNegInf;
  if (!(zeta.sigma2 > 0.0) || !(zeta.sigma_omega2 > 0.0)) return kNegInf;

  double total = -std::log(prior.b_sigma_mu);
  const double mu_var = zeta.sigma_mu * zeta.sigma_mu;
  for (double m : zeta.mu.values()) total += normal::log_pdf(m, 0.0, mu_var);
  const double slope_var = zeta.sigma2 * prior.v;
  for (Eigen::Index k = 1; k < zeta.beta.size(); ++k) total += normal::log_pdf(zeta.beta[k], 0.0, slope_var);
  const double weight_var = zeta.sigma_omega2 * prior.v_omega;
  for (Eigen::Index k = 0; k < zeta.beta_omega.size(); ++k)
    total += normal::log_pdf(zeta.beta_omega[k], 0.0, weight_var);
  total += log_inverse_gamma_density(zeta.sigma2, 0.5 * prior.a0, 0.5 * prior.a0);
  total += log_inverse_gamma_density(zeta.sigma_omega2, 0.5 * prior.a_omega, 0.5 * prior.a_omega);
  return total;
}

}  // namespace bnpirt
