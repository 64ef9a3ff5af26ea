#include "bnpirt/samples_io.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "bnpirt/errors.hpp"

namespace bnpirt {

std::string format_exact(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

namespace {

std::string format_short(double value) {
  if (std::isnan(value)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

const char* role_name(ColumnRole role) {
  switch (role) {
    case ColumnRole::kIntercept: return "intercept";
    case ColumnRole::kAbility: return "ability";
    case ColumnRole::kDifficulty: return "difficulty";
    case ColumnRole::kCovariate: return "covariate";
    case ColumnRole::kMissingIndicator: return "missing-indicator";
  }
  return "unknown";
}

ColumnRole role_from_name(const std::string& s) {
  if (s == "intercept") return ColumnRole::kIntercept;
  if (s == "ability") return ColumnRole::kAbility;
  if (s == "difficulty") return ColumnRole::kDifficulty;
  if (s == "covariate") return ColumnRole::kCovariate;
  if (s == "missing-indicator") return ColumnRole::kMissingIndicator;
  throw DataError("unknown column role '" + s + "' in metadata");
}

}  // namespace

nlohmann::json to_json(const RunMetadata& meta) {
  nlohmann::json columns = nlohmann::json::array();
  for (const auto& c : meta.columns)
    columns.push_back({{"name", c.name},
                       {"role", role_name(c.role)},
                       {"person", c.person},
                       {"item", c.item},
                       {"category", c.category},
                       {"dimension", c.dimension}});
  const auto& p = meta.config.prior;
  return {
      {"software", "bnpirt"},
      {"version", meta.software_version},
      {"created", meta.created},
      {"seed", meta.config.seed},
      {"iterations", meta.config.iterations},
      {"burn_in", meta.config.burn_in},
      {"thin", meta.config.thin},
      {"eps", meta.config.eps},
      {"prior", {{"b_sigma_mu", p.b_sigma_mu}, {"v", p.v}, {"a0", p.a0}, {"v_omega", p.v_omega}, {"a_omega", p.a_omega}}},
      {"stored_draws", meta.stored_draws},
      {"model", meta.model},
      {"data", {{"responses", meta.responses_path}, {"covariates", meta.covariates_path}, {"dimensions", meta.dimensions_path}}},
      {"outlier_threshold", meta.outlier_threshold},
      {"chain", meta.chain},
      {"chains", meta.n_chains},
      {"sampler_stats",
       {{"slice_evaluations", meta.stats.slice_evaluations},
        {"slice_step_outs", meta.stats.slice_step_outs},
        {"slice_shrinks", meta.stats.slice_shrinks},
        {"location_extensions", meta.stats.location_extensions},
        {"jitter_events", meta.stats.jitter_events},
        {"max_n_max", meta.stats.max_n_max}}},
      {"columns", columns},
  };
}

RunMetadata metadata_from_json(const nlohmann::json& j) {
  try {
    RunMetadata meta;
    meta.software_version = j.at("version").get<std::string>();
    meta.created = j.value("created", "");
    meta.config.seed = j.at("seed").get<std::uint64_t>();
    meta.config.iterations = j.at("iterations").get<long>();
    meta.config.burn_in = j.at("burn_in").get<long>();
    meta.config.thin = j.at("thin").get<long>();
    meta.config.eps = j.at("eps").get<double>();
    const auto& p = j.at("prior");
    meta.config.prior = {p.at("b_sigma_mu").get<double>(), p.at("v").get<double>(), p.at("a0").get<double>(),
                         p.at("v_omega").get<double>(), p.at("a_omega").get<double>()};
    meta.stored_draws = j.at("stored_draws").get<long>();
    meta.model = j.at("model").get<std::string>();
    const auto& data = j.at("data");
    meta.responses_path = data.value("responses", "");
    meta.covariates_path = data.value("covariates", "");
    meta.dimensions_path = data.value("dimensions", "");
    meta.outlier_threshold = j.value("outlier_threshold", 2.0);
    meta.chain = j.value("chain", 1);
    meta.n_chains = j.value("chains", 1);
    if (j.contains("sampler_stats")) {
      const auto& s = j.at("sampler_stats");
      meta.stats = {s.value("slice_evaluations", 0L), s.value("slice_step_outs", 0L), s.value("slice_shrinks", 0L),
                    s.value("location_extensions", 0L), s.value("jitter_events", 0L), s.value("max_n_max", 0L)};
    }
    for (const auto& c : j.at("columns"))
      meta.columns.push_back({role_from_name(c.at("role").get<std::string>()), c.at("person").get<int>(),
                              c.at("item").get<int>(), c.at("category").get<int>(), c.at("dimension").get<int>(),
                              c.at("name").get<std::string>()});
    return meta;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed metadata: ") + e.what());
  }
}

void write_samples_csv(std::ostream& out, const ChainSamples& samples) {
  const auto names = parameter_names(samples);
  for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
  out << '\n';
  const int half = union_half_width(samples);
  for (const auto& draw : samples.draws) {
    const auto row = flatten_draw(draw, half);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      if (!std::isnan(row[c])) out << format_exact(row[c]);
    }
    out << '\n';
  }
}

ChainSamples read_samples_csv(std::istream& in, const RunMetadata& meta) {
  ChainSamples samples;
  samples.config = meta.config;
  samples.column_labels = meta.columns;
  samples.stats = meta.stats;
  const auto dim = static_cast<std::size_t>(meta.columns.size());

  std::string line;
  if (!std::getline(in, line)) throw DataError("samples file is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) header.push_back(field);
  }
  if (header.size() < 2 * dim + 4 || (header.size() - 2 * dim - 3) % 2 != 1)
    throw DataError("samples header has " + std::to_string(header.size()) + " columns, inconsistent with " +
                    std::to_string(dim) + " design columns in the metadata");
  const int half = static_cast<int>((header.size() - 2 * dim - 3) / 2);
  for (std::size_t c = 0; c < dim; ++c)
    if (header[c] != meta.columns[c].name || header[dim + c] != "omega:" + meta.columns[c].name)
      throw DataError("samples header column '" + header[c] + "' does not match metadata label '" +
                      meta.columns[c].name + "'");
  if (header[2 * dim] != "sigma_mu" || header[2 * dim + 1] != "sigma2" || header[2 * dim + 2] != "sigma_omega2")
    throw DataError("samples header lacks the variance columns");

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() != header.size()) throw ParseError("samples", line_no, "wrong number of fields");
    auto value = [&](std::size_t c) {
      char* end = nullptr;
      const double v = std::strtod(fields[c].c_str(), &end);
      if (fields[c].empty() || *end != '\0') throw ParseError("samples", line_no, "bad value in column " + header[c]);
      return v;
    };
    ParameterState zeta(static_cast<int>(dim));
    for (std::size_t c = 0; c < dim; ++c) {
      zeta.beta[static_cast<Eigen::Index>(c)] = value(c);
      zeta.beta_omega[static_cast<Eigen::Index>(c)] = value(dim + c);
    }
    zeta.sigma_mu = value(2 * dim);
    zeta.sigma2 = value(2 * dim + 1);
    zeta.sigma_omega2 = value(2 * dim + 2);
    std::vector<double> mu;
    int own = -1;
    for (int j = -half; j <= half; ++j) {
      const std::size_t c = 2 * dim + 3 + static_cast<std::size_t>(j + half);
      if (fields[c].empty()) continue;
      if (own < 0) own = -j;
      mu.push_back(value(c));
    }
    if (own < 0 || mu.size() != static_cast<std::size_t>(2 * own + 1))
      throw ParseError("samples", line_no, "location window is not symmetric about 0");
    zeta.mu = LocationWindow(std::move(mu));
    samples.draws.push_back(std::move(zeta));
  }
  if (static_cast<long>(samples.draws.size()) != meta.stored_draws)
    throw DataError("samples file has " + std::to_string(samples.draws.size()) + " draws but metadata records " +
                    std::to_string(meta.stored_draws));
  return samples;
}

void write_summary_csv(std::ostream& out, const PosteriorSummary& summary, bool with_mcci) {
  out << "parameter,n,mean,sd,q2.5,q25,q50,q75,q97.5,min,max";
  if (with_mcci) out << ",mean_hw,q2.5_hw,q25_hw,q50_hw,q75_hw,q97.5_hw";
  out << '\n';
  for (const auto& p : summary.parameters) {
    out << p.name << ',' << p.count << ',' << format_short(p.mean) << ',' << format_short(p.sd);
    for (double q : p.quantiles) out << ',' << format_short(q);
    out << ',' << format_short(p.min) << ',' << format_short(p.max);
    if (with_mcci) {
      out << ',' << (p.mean_half_width ? format_short(*p.mean_half_width) : "NA");
      for (std::size_t q = 0; q < kSummaryProbs.size(); ++q)
        out << ',' << (p.quantile_half_widths ? format_short((*p.quantile_half_widths)[q]) : "NA");
    }
    out << '\n';
  }
}

void write_fit_csv(std::ostream& out, const FitReport& report, const ItemResponseData& data) {
  out << "person,item,u,mean,variance,residual,outlier\n";
  for (const auto& c : report.cells)
    out << data.person_ids.at(c.person) << ',' << data.item_ids.at(c.item) << ',' << c.response << ','
        << format_short(c.mean) << ',' << format_short(c.variance) << ',' << format_short(c.residual) << ','
        << (c.outlier ? 1 : 0) << '\n';
}

void write_fit_text(std::ostream& out, const FitReport& report) {
  out << "cells: " << report.cells.size() << '\n'
      << "Gof: " << format_short(report.gof) << '\n'
      << "Penalty: " << format_short(report.penalty) << '\n'
      << "D: " << format_short(report.criterion_d) << '\n'
      << "R2: " << format_short(report.r_squared) << '\n'
      << "outlier_threshold: " << format_short(report.outlier_threshold) << '\n'
      << "outliers: " << report.outlier_cells.size() << '\n';
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows) {
  out << "draw,parameter,value\n";
  for (const auto& r : rows) out << r.draw << ',' << r.parameter << ',' << format_exact(r.value) << '\n';
}

}  // namespace bnpirt
