#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bnpirt/design.hpp"
#include "bnpirt/sampler.hpp"

namespace bnpirt {

/// Posterior predictive Pr(U = 1), its mean and variance at one design row.
struct PredictiveMoments {
  double pmf1 = 0.0;
  double mean = 0.0;
  double variance = 0.0;
};

/// Averages response_probability over the stored draws. Draws whose location
/// window is too narrow for x are extended from the prior using a substream
/// keyed on (seed, draw index), so results do not depend on evaluation order.
PredictiveMoments posterior_predictive(const Eigen::VectorXd& x, const ChainSamples& samples);

/// posterior_predictive for every design row, parallel over draws when
/// BNPIRT_THREADS allows. Deterministic for any thread count.
std::vector<PredictiveMoments> posterior_predictive_table(const ObservationDesign& design,
                                                          const ChainSamples& samples);

double standardized_residual(int u, const PredictiveMoments& moments);
double standardized_residual(int u, const Eigen::VectorXd& x, const ChainSamples& samples);

struct FitCell {
  int person = 0;
  int item = 0;
  int response = 0;
  double mean = 0.0;
  double variance = 0.0;
  double residual = 0.0;  // NaN when the predictive variance is zero
  bool outlier = false;
};

struct FitReport {
  std::string label;
  std::vector<FitCell> cells;
  double gof = 0.0;
  double penalty = 0.0;
  double criterion_d = 0.0;
  double r_squared = 0.0;  // NaN when the responses have no spread
  double outlier_threshold = 2.0;
  std::vector<std::pair<int, int>> outlier_cells;
};

struct PredictiveCriterion {
  double gof = 0.0;
  double penalty = 0.0;
  double criterion_d = 0.0;
};

PredictiveCriterion predictive_criterion(std::span<const int> responses, std::span<const PredictiveMoments> predictions);
PredictiveCriterion predictive_criterion(const ObservationDesign& design, const ChainSamples& samples);

/// 1 - Gof / TSS. Throws std::domain_error when TSS = 0.
double r_squared(std::span<const int> responses, std::span<const PredictiveMoments> predictions);
double r_squared(const ObservationDesign& design, const ChainSamples& samples);

FitReport fit_report(const ObservationDesign& design, std::span<const PredictiveMoments> predictions,
                     double outlier_threshold = 2.0, std::string label = {});
FitReport fit_report(const ObservationDesign& design, const ChainSamples& samples, double outlier_threshold = 2.0,
                     std::string label = {});

struct McciEstimate {
  double estimate = 0.0;
  double half_width = 0.0;
};

inline constexpr std::size_t kMinMcciLength = 100;

/// Batch means over floor(sqrt(S)) batches with a Student-t interval at the
/// given confidence level.
McciEstimate batch_means_mcci(std::span<const double> chain, double level = 0.95);

/// Same batching applied to the empirical `prob`-quantile of each batch.
McciEstimate batch_means_quantile_mcci(std::span<const double> chain, double prob, double level = 0.95);

/// Linear-interpolation (type 7) empirical quantile.
double empirical_quantile(std::vector<double> values, double prob);

inline constexpr std::array<double, 5> kSummaryProbs{0.025, 0.25, 0.5, 0.75, 0.975};

struct ParameterSummary {
  std::string name;
  std::size_t count = 0;
  double mean = 0.0;
  double sd = 0.0;
  std::array<double, 5> quantiles{};
  double min = 0.0;
  double max = 0.0;
  std::optional<double> mean_half_width;
  std::optional<std::array<double, 5>> quantile_half_widths;
};

struct PosteriorSummary {
  std::vector<ParameterSummary> parameters;
};

ParameterSummary summarize_chain(const std::string& name, std::span<const double> chain, bool with_mcci = true);

/// Moments, quantiles, extremes and (for chains of at least 100 draws)
/// batch-means half-widths for every stored scalar.
PosteriorSummary posterior_summary(const ChainSamples& samples, bool with_mcci = true);

/// Indices of `reports` sorted by criterion_d, then gof, then label.
/// Throws std::invalid_argument for fewer than two reports or reports over
/// different cells.
std::vector<std::size_t> compare_models(const std::vector<FitReport>& reports);

struct TraceRow {
  std::size_t draw = 0;
  std::string parameter;
  double value = 0.0;
};

/// Long-format (draw, parameter, value), draw-major. An empty name list
/// selects every parameter. Unknown names throw std::out_of_range.
std::vector<TraceRow> trace_export(const ChainSamples& samples, const std::vector<std::string>& names = {});

// Flattened view of stored draws, shared with the samples file.

/// Column names: beta labels, "omega:" + labels, sigma_mu, sigma2,
/// sigma_omega2, then mu[j] over the union of the stored windows.
std::vector<std::string> parameter_names(const ChainSamples& samples);
int union_half_width(const ChainSamples& samples);
/// One row in parameter_names order; NaN where mu_j was not materialized.
std::vector<double> flatten_draw(const ParameterState& zeta, int half_width);
/// Values of one parameter across draws, gaps removed.
std::vector<double> parameter_chain(const ChainSamples& samples, std::size_t column);

/// Worker thread count: BNPIRT_THREADS when set, else the hardware count.
unsigned worker_threads();

}  // namespace bnpirt
