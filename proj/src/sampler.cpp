#include "bnpirt/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

#include "bnpirt/errors.hpp"
#include "bnpirt/normal.hpp"

namespace bnpirt {

namespace {

using RowIterator = Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator;

double row_dot(const ObservationDesign& design, std::size_t k, const Eigen::VectorXd& coef) {
  double total = 0.0;
  for (RowIterator it(design.x, static_cast<Eigen::Index>(k)); it; ++it) total += it.value() * coef[it.col()];
  return total;
}

void check_sizes(const LatentState& latent, const ObservationDesign& design) {
  if (latent.size() != design.size() || latent.u_star.size() != design.size() ||
      latent.z_star.size() != design.size() || latent.log_u_slice.size() != design.size())
    throw std::invalid_argument("latent state does not match the design rows");
}

}  // namespace

double LatentState::u_slice(std::size_t k) const { return std::exp(log_u_slice[k]); }

void ChainConfig::validate() const {
  if (iterations <= 0) throw std::invalid_argument("iterations must be positive");
  if (burn_in < 0 || burn_in >= iterations) throw std::invalid_argument("burn-in must lie in [0, iterations)");
  if (thin < 1) throw std::invalid_argument("thin must be at least 1");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0, 1)");
  prior.validate();
}

long ChainConfig::stored_draws() const { return (iterations - burn_in) / thin; }

double xi(long l) {
  if (l < 0) throw std::invalid_argument("xi: index must be nonnegative");
  return std::exp(-static_cast<double>(l));
}

long n_max_from_log(double min_log_u_slice) {
  if (!(min_log_u_slice < 0.0)) throw std::invalid_argument("slice variables must lie in (0, 1)");
  // exp(-l) > u  <=>  l < -log u
  const double bound = -min_log_u_slice;
  long l = static_cast<long>(std::ceil(bound)) - 1;
  while (l >= 0 && !(-static_cast<double>(l) > min_log_u_slice)) --l;
  return std::max(l, 0L);
}

long compute_n_max(std::span<const double> u_slice) {
  if (u_slice.empty()) return 0;
  double smallest = 1.0;
  for (double u : u_slice) {
    if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("slice variables must lie in (0, 1)");
    smallest = std::min(smallest, u);
  }
  return n_max_from_log(std::log(smallest));
}

// ---------------------------------------------------------------------------

ConjugateSystem::ConjugateSystem(const Eigen::MatrixXd& gram, const Eigen::VectorXd& prior_precision,
                                 const std::vector<std::string>& column_names)
    : dimension_(static_cast<int>(gram.rows())) {
  if (gram.rows() != gram.cols() || gram.rows() != prior_precision.size())
    throw std::invalid_argument("ConjugateSystem: inconsistent dimensions");
  Eigen::MatrixXd precision = gram;
  precision.diagonal() += prior_precision;

  std::vector<std::string> singular;
  for (int c = 0; c < dimension_; ++c)
    if (!(precision(c, c) > 0.0))
      singular.push_back(c < static_cast<int>(column_names.size()) ? column_names[c] : "#" + std::to_string(c));
  if (!singular.empty()) {
    std::string list;
    for (const auto& s : singular) list += (list.empty() ? "" : ", ") + s;
    throw NumericalError("singular precision: no data and no prior information for column(s) " + list);
  }

  llt_.compute(precision);
  if (llt_.info() != Eigen::Success) {
    precision.diagonal().array() += 1e-12;
    llt_.compute(precision);
    jittered_ = true;
    std::clog << "bnpirt: precision matrix not positive definite; added 1e-12 jitter\n";
    if (llt_.info() != Eigen::Success) throw NumericalError("precision matrix factorization failed after jitter");
  }
}

Eigen::VectorXd ConjugateSystem::mean(const Eigen::VectorXd& xty) const { return llt_.solve(xty); }

Eigen::VectorXd ConjugateSystem::draw(const Eigen::VectorXd& xty, double noise_variance, Rng& rng) const {
  Eigen::VectorXd noise(dimension_);
  for (int c = 0; c < dimension_; ++c) noise[c] = rng.normal();
  Eigen::VectorXd result = llt_.matrixU().solve(noise);
  result *= std::sqrt(noise_variance);
  result += mean(xty);
  return result;
}

namespace {

Eigen::MatrixXd gram_matrix(const ObservationDesign& design) {
  const Eigen::SparseMatrix<double> xt = design.x.transpose();
  return Eigen::MatrixXd(xt * design.x);
}

std::vector<std::string> column_names(const ObservationDesign& design) {
  std::vector<std::string> names;
  for (const auto& label : design.column_labels) names.push_back(label.name);
  return names;
}

}  // namespace

ConjugateSystem coefficient_system(const ObservationDesign& design, const PriorConfig& prior) {
  Eigen::VectorXd precision = Eigen::VectorXd::Constant(design.dimension(), 1.0 / prior.v);
  precision[0] = 0.0;  // flat intercept
  return ConjugateSystem(gram_matrix(design), precision, column_names(design));
}

ConjugateSystem weight_coefficient_system(const ObservationDesign& design, const PriorConfig& prior) {
  const Eigen::VectorXd precision = Eigen::VectorXd::Constant(design.dimension(), 1.0 / prior.v_omega);
  return ConjugateSystem(gram_matrix(design), precision, column_names(design));
}

// ---------------------------------------------------------------------------

void update_u_slice(LatentState& latent, Rng& rng) {
  for (std::size_t k = 0; k < latent.size(); ++k)
    latent.log_u_slice[k] = -static_cast<double>(std::labs(latent.z[k])) + std::log(rng.uniform());
}

void update_z(LatentState& latent, ParameterState& zeta, const ObservationDesign& design, Rng& rng,
              Rng& extension_rng, SamplerStats* stats) {
  check_sizes(latent, design);
  const int before = zeta.mu.half_width();
  zeta.mu.extend_to(latent.n_max, zeta.sigma_mu, extension_rng);
  if (stats) {
    stats->location_extensions += zeta.mu.half_width() - before;
    stats->max_n_max = std::max(stats->max_n_max, latent.n_max);
  }

  const double s = zeta.sigma_omega();
  std::vector<double> log_weight, lower, upper;
  for (std::size_t k = 0; k < design.size(); ++k) {
    const long reach = n_max_from_log(latent.log_u_slice[k]);
    if (reach > latent.n_max) throw NumericalError("slice variable below the n_max bound");
    const double x_beta = row_dot(design, k, zeta.beta);
    const double eta = row_dot(design, k, zeta.beta_omega);
    const auto count = static_cast<std::size_t>(2 * reach + 1);
    log_weight.assign(count, 0.0);
    lower.resize(count + 1);
    upper.resize(count + 1);
    for (std::size_t b = 0; b <= count; ++b) {
      const double t = (static_cast<double>(-reach - 1 + static_cast<long>(b)) - eta) / s;
      lower[b] = normal::cdf(t);
      upper[b] = normal::ccdf(t);
    }
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < count; ++c) {
      const long j = -reach + static_cast<long>(c);
      const double a = (static_cast<double>(j) - 1.0 - eta) / s;
      const double b = (static_cast<double>(j) - eta) / s;
      double mass;
      if (a >= 0.0) mass = upper[c] - upper[c + 1];
      else if (b <= 0.0) mass = lower[c + 1] - lower[c];
      else mass = 1.0 - lower[c] - upper[c + 1];
      const double log_mass = mass > 1e-250 ? std::log(mass) : normal::log_interval_mass(a, b);
      log_weight[c] = static_cast<double>(std::labs(j)) +
                      normal::log_pdf(latent.u_star[k], zeta.mu[j] + x_beta, zeta.sigma2) + log_mass;
      top = std::max(top, log_weight[c]);
    }
    if (!std::isfinite(top)) throw NumericalError("update_z: no feasible mixture index for row " + std::to_string(k));
    double total = 0.0;
    for (auto& w : log_weight) {
      w = std::exp(w - top);
      total += w;
    }
    const double target = rng.uniform() * total;
    double cumulative = 0.0;
    std::size_t pick = 0;
    for (std::size_t c = 0; c < count; ++c) {
      if (log_weight[c] == 0.0) continue;
      cumulative += log_weight[c];
      pick = c;
      if (target < cumulative) break;
    }
    latent.z[k] = -reach + static_cast<long>(pick);
  }
}

void update_u_star(LatentState& latent, const ParameterState& zeta, const ObservationDesign& design, Rng& rng) {
  check_sizes(latent, design);
  const double sigma = zeta.sigma();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < design.size(); ++k) {
    const double mean = zeta.mu[latent.z[k]] + row_dot(design, k, zeta.beta);
    latent.u_star[k] = design.rows[k].response == 1 ? truncated_normal(rng, mean, sigma, 0.0, kInf)
                                                    : truncated_normal(rng, mean, sigma, -kInf, 0.0);
  }
}

void update_mu(ParameterState& zeta, const LatentState& latent, const ObservationDesign& design, Rng& rng) {
  check_sizes(latent, design);
  const int half = zeta.mu.half_width();
  std::vector<double> sums(2 * half + 1, 0.0);
  std::vector<long> counts(2 * half + 1, 0);
  for (std::size_t k = 0; k < design.size(); ++k) {
    const long j = latent.z[k];
    if (!zeta.mu.contains(j)) throw NumericalError("update_mu: assignment outside the location window");
    sums[j + half] += latent.u_star[k] - row_dot(design, k, zeta.beta);
    counts[j + half] += 1;
  }
  const double prior_precision = 1.0 / (zeta.sigma_mu * zeta.sigma_mu);
  for (long j = -half; j <= half; ++j) {
    const double precision = static_cast<double>(counts[j + half]) / zeta.sigma2 + prior_precision;
    const double mean = sums[j + half] / zeta.sigma2 / precision;
    zeta.mu[j] = rng.normal(mean, 1.0 / std::sqrt(precision));
  }
}

void update_sigma_mu(ParameterState& zeta, double b_sigma_mu, Rng& rng, SamplerStats* stats) {
  double sum_sq = 0.0;
  for (double m : zeta.mu.values()) sum_sq += m * m;
  const double count = static_cast<double>(zeta.mu.values().size());
  auto log_target = [&](double s) {
    if (!(s > 0.0) || !(s < b_sigma_mu)) return -std::numeric_limits<double>::infinity();
    return -count * std::log(s) - 0.5 * sum_sq / (s * s);
  };
  const double x0 = std::min(zeta.sigma_mu, std::nextafter(b_sigma_mu, 0.0));
  const double level = log_target(x0) - rng.exponential(1.0);
  const double width = b_sigma_mu / 10.0;
  double left = x0 - width * rng.uniform();
  double right = left + width;
  long evaluations = 1;
  while (left > 0.0 && log_target(left) > level) {
    left -= width;
    ++evaluations;
    if (stats) ++stats->slice_step_outs;
  }
  while (right < b_sigma_mu && log_target(right) > level) {
    right += width;
    ++evaluations;
    if (stats) ++stats->slice_step_outs;
  }
  left = std::max(left, 0.0);
  right = std::min(right, b_sigma_mu);
  for (;;) {
    const double proposal = rng.uniform(left, right);
    ++evaluations;
    if (log_target(proposal) > level) {
      zeta.sigma_mu = proposal;
      break;
    }
    if (stats) ++stats->slice_shrinks;
    if (proposal < x0) left = proposal;
    else right = proposal;
  }
  if (stats) stats->slice_evaluations += evaluations;
}

void update_beta(ParameterState& zeta, const LatentState& latent, const ObservationDesign& design,
                 const ConjugateSystem& system, Rng& rng) {
  check_sizes(latent, design);
  Eigen::VectorXd y(static_cast<Eigen::Index>(design.size()));
  for (std::size_t k = 0; k < design.size(); ++k)
    y[static_cast<Eigen::Index>(k)] = latent.u_star[k] - zeta.mu[latent.z[k]];
  const Eigen::VectorXd xty = design.x.transpose() * y;
  zeta.beta = system.draw(xty, zeta.sigma2, rng);
}

void update_sigma2(ParameterState& zeta, const LatentState& latent, const ObservationDesign& design,
                   const PriorConfig& prior, Rng& rng) {
  check_sizes(latent, design);
  double ssr = 0.0;
  for (std::size_t k = 0; k < design.size(); ++k) {
    const double r = latent.u_star[k] - zeta.mu[latent.z[k]] - row_dot(design, k, zeta.beta);
    ssr += r * r;
  }
  const Eigen::Index slopes = std::max<Eigen::Index>(zeta.beta.size() - 1, 0);
  const double slope_ss = slopes > 0 ? zeta.beta.tail(slopes).squaredNorm() : 0.0;
  const double shape = 0.5 * (prior.a0 + static_cast<double>(design.size()) + static_cast<double>(slopes));
  const double rate = 0.5 * (prior.a0 + ssr + slope_ss / prior.v);
  zeta.sigma2 = rng.inverse_gamma(shape, rate);
}

void update_z_star(LatentState& latent, const ParameterState& zeta, const ObservationDesign& design, Rng& rng) {
  check_sizes(latent, design);
  const double s = zeta.sigma_omega();
  for (std::size_t k = 0; k < design.size(); ++k) {
    const double z = static_cast<double>(latent.z[k]);
    latent.z_star[k] = truncated_normal(rng, row_dot(design, k, zeta.beta_omega), s, z - 1.0, z);
  }
}

void update_beta_omega(ParameterState& zeta, const LatentState& latent, const ObservationDesign& design,
                       const ConjugateSystem& system, Rng& rng) {
  check_sizes(latent, design);
  const Eigen::Map<const Eigen::VectorXd> z_star(latent.z_star.data(), static_cast<Eigen::Index>(design.size()));
  const Eigen::VectorXd xty = design.x.transpose() * z_star;
  zeta.beta_omega = system.draw(xty, zeta.sigma_omega2, rng);
}

void update_sigma_omega2(ParameterState& zeta, const LatentState& latent, const ObservationDesign& design,
                         const PriorConfig& prior, Rng& rng) {
  check_sizes(latent, design);
  double ssr = 0.0;
  for (std::size_t k = 0; k < design.size(); ++k) {
    const double r = latent.z_star[k] - row_dot(design, k, zeta.beta_omega);
    ssr += r * r;
  }
  const double dim = static_cast<double>(zeta.beta_omega.size());
  const double shape = 0.5 * (prior.a_omega + static_cast<double>(design.size()) + dim);
  const double rate = 0.5 * (prior.a_omega + ssr + zeta.beta_omega.squaredNorm() / prior.v_omega);
  zeta.sigma_omega2 = rng.inverse_gamma(shape, rate);
}

std::optional<std::string> check_latent_invariants(const LatentState& latent, const ObservationDesign& design) {
  if (latent.size() != design.size()) return "latent size differs from design";
  for (std::size_t k = 0; k < design.size(); ++k) {
    const long az = std::labs(latent.z[k]);
    std::ostringstream where;
    where << " at row " << k;
    if (!(latent.log_u_slice[k] < -static_cast<double>(az))) return "slice bound violated" + where.str();
    if (!std::isfinite(latent.log_u_slice[k])) return "slice variable not positive" + where.str();
    const bool positive = latent.u_star[k] > 0.0;
    if (positive != (design.rows[k].response == 1)) return "u* sign constraint violated" + where.str();
    const double z = static_cast<double>(latent.z[k]);
    if (!(latent.z_star[k] > z - 1.0 && latent.z_star[k] < z)) return "z* interval violated" + where.str();
    if (az > latent.n_max) return "|z| exceeds n_max" + where.str();
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

GibbsSampler::GibbsSampler(const ObservationDesign& design, const ChainConfig& config)
    : design_(design),
      config_(config),
      beta_system_((config.validate(), coefficient_system(design, config.prior))),
      omega_system_(weight_coefficient_system(design, config.prior)),
      zeta_(design.dimension()) {
  if (design.empty()) throw std::invalid_argument("cannot sample from an empty design");
  stats_.jitter_events = (beta_system_.jittered() ? 1 : 0) + (omega_system_.jittered() ? 1 : 0);
  for (std::uint64_t s = 0; s <= static_cast<std::uint64_t>(Stream::kSimulate); ++s)
    streams_.emplace_back(config.seed, static_cast<Stream>(s));
}

Rng& GibbsSampler::stream(Stream s) { return streams_[static_cast<std::size_t>(s)]; }

void GibbsSampler::initialize() {
  Rng& rng = stream(Stream::kInit);
  const std::size_t n = design_.size();
  zeta_ = ParameterState(design_.dimension());
  zeta_.sigma2 = 1.0;
  zeta_.sigma_omega2 = 1.0;
  zeta_.sigma_mu = 0.5 * config_.prior.b_sigma_mu;
  zeta_.mu = LocationWindow({rng.normal(0.0, zeta_.sigma_mu)});

  latent_.z.assign(n, 0);
  latent_.log_u_slice.resize(n);
  latent_.u_star.resize(n);
  latent_.z_star.resize(n);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    latent_.log_u_slice[k] = std::log(rng.uniform());
    const double mean = zeta_.mu[0];
    latent_.u_star[k] = design_.rows[k].response == 1 ? truncated_normal(rng, mean, 1.0, 0.0, kInf)
                                                       : truncated_normal(rng, mean, 1.0, -kInf, 0.0);
    latent_.z_star[k] = truncated_normal(rng, 0.0, 1.0, -1.0, 0.0);
  }
  latent_.n_max = 0;
  iteration_ = 0;
}

void GibbsSampler::check_finite(long iteration, const char* stage) const {
  auto fail = [&](const std::string& what) {
    throw NumericalError("non-finite " + what + " at iteration " + std::to_string(iteration) + " after " + stage);
  };
  if (!std::isfinite(zeta_.sigma_mu)) fail("sigma_mu");
  if (!std::isfinite(zeta_.sigma2) || !(zeta_.sigma2 > 0.0)) fail("sigma2");
  if (!std::isfinite(zeta_.sigma_omega2) || !(zeta_.sigma_omega2 > 0.0)) fail("sigma_omega2");
  if (!zeta_.beta.allFinite()) fail("beta");
  if (!zeta_.beta_omega.allFinite()) fail("beta_omega");
  for (double m : zeta_.mu.values())
    if (!std::isfinite(m)) fail("mu");
}

void GibbsSampler::sweep() {
  ++iteration_;
  update_u_slice(latent_, stream(Stream::kSlice));
  latent_.n_max = n_max_from_log(*std::min_element(latent_.log_u_slice.begin(), latent_.log_u_slice.end()));
  update_z(latent_, zeta_, design_, stream(Stream::kAssignment), stream(Stream::kLocations), &stats_);
  update_u_star(latent_, zeta_, design_, stream(Stream::kLatentResponse));
  update_mu(zeta_, latent_, design_, stream(Stream::kLocations));
  check_finite(iteration_, "update_mu");
  update_sigma_mu(zeta_, config_.prior.b_sigma_mu, stream(Stream::kLocationScale), &stats_);
  update_beta(zeta_, latent_, design_, beta_system_, stream(Stream::kCoefficients));
  update_sigma2(zeta_, latent_, design_, config_.prior, stream(Stream::kKernelVariance));
  check_finite(iteration_, "update_sigma2");
  update_z_star(latent_, zeta_, design_, stream(Stream::kLatentWeight));
  update_beta_omega(zeta_, latent_, design_, omega_system_, stream(Stream::kWeightCoefficients));
  update_sigma_omega2(zeta_, latent_, design_, config_.prior, stream(Stream::kWeightVariance));
  check_finite(iteration_, "update_sigma_omega2");
}

ChainSamples run_chain(const ObservationDesign& design, const ChainConfig& config, const SweepObserver& observer) {
  config.validate();
  GibbsSampler sampler(design, config);
  sampler.initialize();
  ChainSamples samples;
  samples.config = config;
  samples.column_labels = design.column_labels;
  samples.draws.reserve(static_cast<std::size_t>(config.stored_draws()));
  for (long it = 1; it <= config.iterations; ++it) {
    sampler.sweep();
    if (observer) observer(it, sampler.latents(), sampler.parameters());
    if (it > config.burn_in && (it - config.burn_in) % config.thin == 0) samples.draws.push_back(sampler.parameters());
  }
  samples.stats = sampler.stats();
  return samples;
}

}  // namespace bnpirt
