#include "bnpirt/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "bnpirt/errors.hpp"

namespace bnpirt {

unsigned worker_threads() {
  if (const char* env = std::getenv("BNPIRT_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

constexpr std::size_t kDrawChunk = 64;

// A stored draw whose location window covers the weight windows for every
// latent weight mean in [eta_lo, eta_hi]; extends a private copy if needed.
class CoveredDraw {
 public:
  CoveredDraw(const ChainSamples& samples, std::size_t index, double eta_lo, double eta_hi)
      : draw_(&samples.draws[index]) {
    const double s = draw_->sigma_omega();
    const auto lo = weight_window(eta_lo, s, samples.config.eps);
    const auto hi = weight_window(eta_hi, s, samples.config.eps);
    const long reach = std::max({std::labs(lo.j_lo), std::labs(lo.j_hi), std::labs(hi.j_lo), std::labs(hi.j_hi)});
    if (!draw_->mu.contains(reach)) {
      copy_ = *draw_;
      Rng rng(samples.config.seed, Stream::kPredictive, index);
      copy_->mu.extend_to(reach, copy_->sigma_mu, rng);
      draw_ = &*copy_;
    }
  }
  const ParameterState& get() const { return *draw_; }

 private:
  const ParameterState* draw_;
  std::optional<ParameterState> copy_;
};

PredictiveMoments moments_from_mean(double pmf1) { return {pmf1, pmf1, pmf1 * (1.0 - pmf1)}; }

void require_draws(const ChainSamples& samples) {
  if (samples.draws.empty()) throw std::invalid_argument("posterior predictive needs at least one stored draw");
}

}  // namespace

PredictiveMoments posterior_predictive(const Eigen::VectorXd& x, const ChainSamples& samples) {
  require_draws(samples);
  double total = 0.0;
  for (std::size_t d = 0; d < samples.draws.size(); ++d) {
    const auto& draw = samples.draws[d];
    if (x.size() != draw.dimension())
      throw std::invalid_argument("design vector length " + std::to_string(x.size()) + " does not match " +
                                  std::to_string(draw.dimension()) + " coefficients");
    const double eta = x.dot(draw.beta_omega);
    const CoveredDraw covered(samples, d, eta, eta);
    total += response_probability(x, covered.get(), samples.config.eps);
  }
  return moments_from_mean(total / static_cast<double>(samples.draws.size()));
}

std::vector<PredictiveMoments> posterior_predictive_table(const ObservationDesign& design,
                                                          const ChainSamples& samples) {
  require_draws(samples);
  const std::size_t n_cells = design.size();
  const std::size_t n_draws = samples.draws.size();
  const std::size_t n_chunks = (n_draws + kDrawChunk - 1) / kDrawChunk;
  std::vector<std::vector<double>> chunk_sums(n_chunks);
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t c = next++; c < n_chunks; c = next++) {
      std::vector<double> sums(n_cells, 0.0);
      const std::size_t end = std::min(n_draws, (c + 1) * kDrawChunk);
      for (std::size_t d = c * kDrawChunk; d < end; ++d) {
        const auto& draw = samples.draws[d];
        if (draw.dimension() != design.dimension())
          throw std::invalid_argument("stored draws do not match the design dimension");
        const Eigen::VectorXd x_beta = design.x * draw.beta;
        const Eigen::VectorXd eta = design.x * draw.beta_omega;
        const CoveredDraw covered(samples, d, eta.minCoeff(), eta.maxCoeff());
        for (std::size_t k = 0; k < n_cells; ++k) {
          const auto r = static_cast<Eigen::Index>(k);
          sums[k] += response_probability_from_predictors(x_beta[r], eta[r], covered.get(), samples.config.eps);
        }
      }
      chunk_sums[c] = std::move(sums);
    }
  };

  const unsigned n_threads = std::min<unsigned>(worker_threads(), static_cast<unsigned>(n_chunks));
  if (n_threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(n_threads);
    for (unsigned t = 0; t < n_threads; ++t)
      pool.emplace_back([&, t] {
        try {
          work();
        } catch (...) {
          errors[t] = std::current_exception();
          next = n_chunks;
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  std::vector<PredictiveMoments> out(n_cells);
  for (std::size_t k = 0; k < n_cells; ++k) {
    double total = 0.0;
    for (const auto& sums : chunk_sums) total += sums[k];
    out[k] = moments_from_mean(total / static_cast<double>(n_draws));
  }
  return out;
}

double standardized_residual(int u, const PredictiveMoments& moments) {
  if (u != 0 && u != 1) throw std::invalid_argument("response must be 0 or 1");
  if (!(moments.variance > 0.0)) throw std::domain_error("standardized residual undefined: predictive variance is zero");
  return (u - moments.mean) / std::sqrt(moments.variance);
}

double standardized_residual(int u, const Eigen::VectorXd& x, const ChainSamples& samples) {
  return standardized_residual(u, posterior_predictive(x, samples));
}

PredictiveCriterion predictive_criterion(std::span<const int> responses, std::span<const PredictiveMoments> predictions) {
  if (responses.size() != predictions.size()) throw std::invalid_argument("responses and predictions differ in length");
  PredictiveCriterion c;
  for (std::size_t k = 0; k < responses.size(); ++k) {
    const double e = responses[k] - predictions[k].mean;
    c.gof += e * e;
    c.penalty += predictions[k].variance;
  }
  c.criterion_d = c.gof + c.penalty;
  return c;
}

namespace {

std::vector<int> responses_of(const ObservationDesign& design) {
  std::vector<int> u;
  u.reserve(design.size());
  for (const auto& row : design.rows) u.push_back(row.response);
  return u;
}

double total_sum_of_squares(std::span<const int> responses) {
  if (responses.empty()) return 0.0;
  const double mean = std::accumulate(responses.begin(), responses.end(), 0.0) / static_cast<double>(responses.size());
  double tss = 0.0;
  for (int u : responses) tss += (u - mean) * (u - mean);
  return tss;
}

}  // namespace

PredictiveCriterion predictive_criterion(const ObservationDesign& design, const ChainSamples& samples) {
  const auto table = posterior_predictive_table(design, samples);
  return predictive_criterion(responses_of(design), table);
}

double r_squared(std::span<const int> responses, std::span<const PredictiveMoments> predictions) {
  const double tss = total_sum_of_squares(responses);
  if (!(tss > 0.0)) throw std::domain_error("R-squared undefined: responses have no spread");
  return 1.0 - predictive_criterion(responses, predictions).gof / tss;
}

double r_squared(const ObservationDesign& design, const ChainSamples& samples) {
  const auto table = posterior_predictive_table(design, samples);
  return r_squared(responses_of(design), table);
}

FitReport fit_report(const ObservationDesign& design, std::span<const PredictiveMoments> predictions,
                     double outlier_threshold, std::string label) {
  if (predictions.size() != design.size()) throw std::invalid_argument("one prediction per design row required");
  const auto u = responses_of(design);
  FitReport report;
  report.label = std::move(label);
  report.outlier_threshold = outlier_threshold;
  const auto crit = predictive_criterion(u, predictions);
  report.gof = crit.gof;
  report.penalty = crit.penalty;
  report.criterion_d = crit.criterion_d;
  const double tss = total_sum_of_squares(u);
  report.r_squared = tss > 0.0 ? 1.0 - report.gof / tss : std::numeric_limits<double>::quiet_NaN();
  report.cells.reserve(design.size());
  for (std::size_t k = 0; k < design.size(); ++k) {
    FitCell cell{design.rows[k].person, design.rows[k].item, u[k], predictions[k].mean, predictions[k].variance,
                 std::numeric_limits<double>::quiet_NaN(), false};
    if (cell.variance > 0.0) {
      cell.residual = standardized_residual(cell.response, predictions[k]);
      cell.outlier = std::fabs(cell.residual) > outlier_threshold;
    }
    if (cell.outlier) report.outlier_cells.emplace_back(cell.person, cell.item);
    report.cells.push_back(cell);
  }
  return report;
}

FitReport fit_report(const ObservationDesign& design, const ChainSamples& samples, double outlier_threshold,
                     std::string label) {
  const auto table = posterior_predictive_table(design, samples);
  return fit_report(design, table, outlier_threshold, std::move(label));
}

// ---------------------------------------------------------------------------

double empirical_quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw std::invalid_argument("quantile probability outside [0, 1]");
  const double h = prob * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
  const double a = values[lo];
  if (lo + 1 >= values.size()) return a;
  const double b = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
  return a + (h - static_cast<double>(lo)) * (b - a);
}

namespace {

struct Batching {
  std::size_t count;
  std::size_t size;
  std::size_t offset;  // leading draws left out so batches end at the chain end
};

Batching batching_for(std::size_t length) {
  if (length < kMinMcciLength)
    throw DataError("batch-means interval needs at least " + std::to_string(kMinMcciLength) + " draws, got " +
                    std::to_string(length));
  const auto count = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(length))));
  const std::size_t size = length / count;
  return {count, size, length - count * size};
}

double t_half_width(const std::vector<double>& batch_values, double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("confidence level must lie in (0, 1)");
  const double n = static_cast<double>(batch_values.size());
  const double mean = std::accumulate(batch_values.begin(), batch_values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : batch_values) ss += (v - mean) * (v - mean);
  const double se = std::sqrt(ss / (n - 1.0) / n);
  const boost::math::students_t dist(n - 1.0);
  return boost::math::quantile(dist, 0.5 + 0.5 * level) * se;
}

}  // namespace

McciEstimate batch_means_mcci(std::span<const double> chain, double level) {
  const auto b = batching_for(chain.size());
  std::vector<double> means(b.count);
  for (std::size_t k = 0; k < b.count; ++k) {
    const auto first = chain.begin() + static_cast<std::ptrdiff_t>(b.offset + k * b.size);
    means[k] = std::accumulate(first, first + static_cast<std::ptrdiff_t>(b.size), 0.0) / static_cast<double>(b.size);
  }
  const double estimate = std::accumulate(chain.begin(), chain.end(), 0.0) / static_cast<double>(chain.size());
  return {estimate, t_half_width(means, level)};
}

McciEstimate batch_means_quantile_mcci(std::span<const double> chain, double prob, double level) {
  const auto b = batching_for(chain.size());
  std::vector<double> quantiles(b.count);
  for (std::size_t k = 0; k < b.count; ++k) {
    const auto first = chain.begin() + static_cast<std::ptrdiff_t>(b.offset + k * b.size);
    quantiles[k] = empirical_quantile(std::vector<double>(first, first + static_cast<std::ptrdiff_t>(b.size)), prob);
  }
  return {empirical_quantile(std::vector<double>(chain.begin(), chain.end()), prob), t_half_width(quantiles, level)};
}

ParameterSummary summarize_chain(const std::string& name, std::span<const double> chain, bool with_mcci) {
  if (chain.empty()) throw std::invalid_argument("cannot summarize an empty chain for " + name);
  ParameterSummary s;
  s.name = name;
  s.count = chain.size();
  const double n = static_cast<double>(chain.size());
  s.mean = std::accumulate(chain.begin(), chain.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : chain) ss += (v - s.mean) * (v - s.mean);
  s.sd = chain.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  std::vector<double> sorted(chain.begin(), chain.end());
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  for (std::size_t q = 0; q < kSummaryProbs.size(); ++q) s.quantiles[q] = empirical_quantile(sorted, kSummaryProbs[q]);
  if (with_mcci && chain.size() >= kMinMcciLength) {
    s.mean_half_width = batch_means_mcci(chain).half_width;
    std::array<double, 5> hw{};
    for (std::size_t q = 0; q < kSummaryProbs.size(); ++q)
      hw[q] = batch_means_quantile_mcci(chain, kSummaryProbs[q]).half_width;
    s.quantile_half_widths = hw;
  }
  return s;
}

PosteriorSummary posterior_summary(const ChainSamples& samples, bool with_mcci) {
  if (samples.draws.empty()) throw std::invalid_argument("posterior_summary: no stored draws");
  const auto names = parameter_names(samples);
  PosteriorSummary summary;
  for (std::size_t c = 0; c < names.size(); ++c) {
    const auto chain = parameter_chain(samples, c);
    if (chain.empty()) continue;
    summary.parameters.push_back(summarize_chain(names[c], chain, with_mcci));
  }
  return summary;
}

std::vector<std::size_t> compare_models(const std::vector<FitReport>& reports) {
  if (reports.size() < 2) throw std::invalid_argument("model comparison needs at least two fit reports");
  auto cell_set = [](const FitReport& r) {
    std::set<std::pair<int, int>> cells;
    for (const auto& c : r.cells) cells.emplace(c.person, c.item);
    return cells;
  };
  const auto reference = cell_set(reports.front());
  for (std::size_t k = 1; k < reports.size(); ++k)
    if (cell_set(reports[k]) != reference)
      throw std::invalid_argument("fit reports '" + reports.front().label + "' and '" + reports[k].label +
                                  "' cover different cells");
  std::vector<std::size_t> order(reports.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ra = reports[a];
    const auto& rb = reports[b];
    if (ra.criterion_d != rb.criterion_d) return ra.criterion_d < rb.criterion_d;
    if (ra.gof != rb.gof) return ra.gof < rb.gof;
    return ra.label < rb.label;
  });
  return order;
}

// ---------------------------------------------------------------------------

int union_half_width(const ChainSamples& samples) {
  int half = 0;
  for (const auto& d : samples.draws) half = std::max(half, d.mu.half_width());
  return half;
}

std::vector<std::string> parameter_names(const ChainSamples& samples) {
  std::vector<std::string> names;
  for (const auto& label : samples.column_labels) names.push_back(label.name);
  for (const auto& label : samples.column_labels) names.push_back("omega:" + label.name);
  names.insert(names.end(), {"sigma_mu", "sigma2", "sigma_omega2"});
  const int half = union_half_width(samples);
  for (int j = -half; j <= half; ++j) names.push_back("mu[" + std::to_string(j) + "]");
  return names;
}

std::vector<double> flatten_draw(const ParameterState& zeta, int half_width) {
  std::vector<double> row;
  row.reserve(2 * zeta.beta.size() + 3 + 2 * half_width + 1);
  row.insert(row.end(), zeta.beta.data(), zeta.beta.data() + zeta.beta.size());
  row.insert(row.end(), zeta.beta_omega.data(), zeta.beta_omega.data() + zeta.beta_omega.size());
  row.insert(row.end(), {zeta.sigma_mu, zeta.sigma2, zeta.sigma_omega2});
  for (int j = -half_width; j <= half_width; ++j)
    row.push_back(zeta.mu.contains(j) ? zeta.mu[j] : std::numeric_limits<double>::quiet_NaN());
  return row;
}

std::vector<double> parameter_chain(const ChainSamples& samples, std::size_t column) {
  std::vector<double> chain;
  chain.reserve(samples.draws.size());
  const int half = union_half_width(samples);
  for (const auto& d : samples.draws) {
    const auto dim = static_cast<std::size_t>(d.dimension());
    double v;
    if (column < dim) {
      v = d.beta[static_cast<Eigen::Index>(column)];
    } else if (column < 2 * dim) {
      v = d.beta_omega[static_cast<Eigen::Index>(column - dim)];
    } else if (column < 2 * dim + 3) {
      const std::size_t k = column - 2 * dim;
      v = k == 0 ? d.sigma_mu : k == 1 ? d.sigma2 : d.sigma_omega2;
    } else {
      const long j = static_cast<long>(column - 2 * dim - 3) - half;
      if (j > half) throw std::out_of_range("parameter column out of range");
      if (!d.mu.contains(j)) continue;
      v = d.mu[j];
    }
    chain.push_back(v);
  }
  return chain;
}

std::vector<TraceRow> trace_export(const ChainSamples& samples, const std::vector<std::string>& names) {
  const auto all = parameter_names(samples);
  std::vector<std::size_t> columns;
  if (names.empty()) {
    columns.resize(all.size());
    std::iota(columns.begin(), columns.end(), 0);
  } else {
    std::map<std::string, std::size_t> index;
    for (std::size_t c = 0; c < all.size(); ++c) index.emplace(all[c], c);
    for (const auto& n : names) {
      const auto it = index.find(n);
      if (it == index.end()) {
        std::string valid;
        for (const auto& a : all) valid += (valid.empty() ? "" : ", ") + a;
        throw std::out_of_range("unknown parameter '" + n + "'; valid names: " + valid);
      }
      columns.push_back(it->second);
    }
  }
  const int half = union_half_width(samples);
  std::vector<TraceRow> rows;
  for (std::size_t d = 0; d < samples.draws.size(); ++d) {
    const auto flat = flatten_draw(samples.draws[d], half);
    for (std::size_t c : columns)
      if (!std::isnan(flat[c])) rows.push_back({d, all[c], flat[c]});
  }
  return rows;
}

}  // namespace bnpirt
