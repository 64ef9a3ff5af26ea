#pragma once

// Simulate-then-fit recovery study shared by the acceptance suite and the
// pilot that calibrates its bound.

#include <algorithm>
#include <numeric>
#include <vector>

#include "bnpirt/design.hpp"
#include "bnpirt/model.hpp"
#include "bnpirt/random.hpp"
#include "bnpirt/sampler.hpp"

namespace recovery {

inline constexpr int kPersons = 200;
inline constexpr int kItems = 10;
inline constexpr long kIterations = 20000;

inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t k = 0; k < order.size();) {
    std::size_t e = k;
    while (e + 1 < order.size() && v[order[e + 1]] == v[order[k]]) ++e;
    for (std::size_t t = k; t <= e; ++t) r[order[t]] = 0.5 * static_cast<double>(k + e) + 1.0;
    k = e + 1;
  }
  return r;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    sab += (a[k] - ma) * (b[k] - mb);
    saa += (a[k] - ma) * (a[k] - ma);
    sbb += (b[k] - mb) * (b[k] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  return pearson(ranks(a), ranks(b));
}

struct Outcome {
  double rank_correlation = 0.0;
  std::size_t stored_draws = 0;
};

/// Abilities and difficulties from N(0, 1), sigma^2 = 1, sigma_omega^2 = 1,
/// the remaining parameters from the default prior; then a default-prior fit.
inline Outcome run(std::uint64_t seed, long iterations = kIterations) {
  using namespace bnpirt;
  ItemResponseData data;
  data.n_persons = kPersons;
  data.n_items = kItems;
  data.category_counts.assign(kItems, 1);
  for (int p = 0; p < kPersons; ++p) data.person_ids.push_back(std::to_string(p + 1));
  for (int i = 0; i < kItems; ++i) data.item_ids.push_back(std::to_string(i + 1));
  for (int p = 0; p < kPersons; ++p)
    for (int i = 0; i < kItems; ++i) data.observations.push_back({p, i, 0});
  auto design = build_dichotomous(data);

  Rng rng(seed, Stream::kSimulate, 100);
  ParameterState truth(design.dimension());
  truth.sigma2 = 1.0;
  truth.sigma_omega2 = 1.0;
  truth.sigma_mu = rng.uniform();
  for (int p = 0; p < kPersons; ++p) truth.beta[1 + p] = rng.normal();
  for (int i = 0; i < kItems; ++i) truth.beta[1 + kPersons + i] = rng.normal();
  for (int c = 0; c < design.dimension(); ++c) truth.beta_omega[c] = rng.normal();
  truth.mu = LocationWindow({rng.normal(0.0, truth.sigma_mu)});

  const Eigen::VectorXd eta = design.x * truth.beta_omega;
  const Eigen::VectorXd xb = design.x * truth.beta;
  cover_weight_window(truth, eta.minCoeff(), kDefaultSeriesTolerance, rng);
  cover_weight_window(truth, eta.maxCoeff(), kDefaultSeriesTolerance, rng);
  for (std::size_t k = 0; k < design.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    const double p = response_probability_from_predictors(xb[r], eta[r], truth);
    design.rows[k].response = design.rows[k].score = rng.uniform() < p ? 1 : 0;
  }

  ChainConfig config;
  config.iterations = iterations;
  config.seed = seed;
  const auto samples = run_chain(design, config);

  std::vector<double> truth_theta(kPersons), mean_theta(kPersons, 0.0);
  for (int p = 0; p < kPersons; ++p) truth_theta[p] = truth.beta[1 + p];
  for (const auto& draw : samples.draws)
    for (int p = 0; p < kPersons; ++p) mean_theta[p] += draw.beta[1 + p];
  for (auto& m : mean_theta) m /= static_cast<double>(samples.draws.size());
  return {spearman(truth_theta, mean_theta), samples.draws.size()};
}

}  // namespace recovery
