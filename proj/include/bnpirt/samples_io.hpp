#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "bnpirt/design.hpp"
#include "bnpirt/diagnostics.hpp"
#include "bnpirt/sampler.hpp"

namespace bnpirt {

/// Sidecar describing how a samples file was produced.
struct RunMetadata {
  std::string software_version;
  std::string created;  // UTC timestamp; the only non-reproducible field
  ChainConfig config;
  long stored_draws = 0;
  std::string model;
  std::string responses_path;
  std::string covariates_path;
  std::string dimensions_path;
  std::vector<ColumnLabel> columns;
  double outlier_threshold = 2.0;
  int chain = 1;
  int n_chains = 1;
  SamplerStats stats;
};

nlohmann::json to_json(const RunMetadata& meta);
RunMetadata metadata_from_json(const nlohmann::json& j);

void write_samples_csv(std::ostream& out, const ChainSamples& samples);

/// Parses a samples file written by write_samples_csv. Throws DataError when
/// the header or draw count disagrees with the metadata.
ChainSamples read_samples_csv(std::istream& in, const RunMetadata& meta);

void write_summary_csv(std::ostream& out, const PosteriorSummary& summary, bool with_mcci);

void write_fit_csv(std::ostream& out, const FitReport& report, const ItemResponseData& data);
void write_fit_text(std::ostream& out, const FitReport& report);

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows);

/// Shortest round-tripping decimal form of a double ("%.17g").
std::string format_exact(double value);

}  // namespace bnpirt
