#include "bnpirt/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "bnpirt/design.hpp"
#include "bnpirt/diagnostics.hpp"
#include "bnpirt/errors.hpp"
#include "bnpirt/model.hpp"
#include "bnpirt/samples_io.hpp"
#include "bnpirt/sampler.hpp"
#include "bnpirt/svg.hpp"

#ifndef BNPIRT_VERSION
#define BNPIRT_VERSION "0.0.0"
#endif

namespace bnpirt {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Files written by one command; removed again if the command fails.
class OutputSet {
 public:
  void write(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    files_.push_back(path);
    out << content;
    if (!out) throw DataError("failed writing " + path.string());
  }
  void rollback() {
    std::error_code ec;
    for (const auto& f : files_) fs::remove(f, ec);
    files_.clear();
  }
  void commit() { files_.clear(); }

 private:
  std::vector<fs::path> files_;
};

template <class Fn>
std::string render(Fn&& fn) {
  std::ostringstream out;
  fn(out);
  return out.str();
}

PriorConfig parse_prior(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(field, &used));
      if (used != field.size()) throw std::invalid_argument(field);
    } catch (const std::exception&) {
      throw UsageError("--prior: '" + field + "' is not a number");
    }
  }
  if (values.size() != 5) throw UsageError("--prior takes five comma-separated values b_sigma_mu,v,a0,v_omega,a_omega");
  PriorConfig prior{values[0], values[1], values[2], values[3], values[4]};
  try {
    prior.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--prior: ") + e.what());
  }
  return prior;
}

std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> names;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ','))
    if (!field.empty()) names.push_back(field);
  return names;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string chain_suffix(int chain, int n_chains) { return n_chains > 1 ? "_chain" + std::to_string(chain) : ""; }

std::string file_safe(const std::string& name) {
  std::string out;
  for (char c : name) out += std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ? c : '_';
  return out;
}

ModelKind resolve_model(const std::string& text, const ItemResponseData& data) {
  if (text == "auto") return data.max_categories() > 1 ? ModelKind::kPolytomous : ModelKind::kDichotomous;
  try {
    return parse_model_kind(text);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

struct ReportOptions {
  double outlier_threshold = 2.0;
  bool mcci = false;
  bool plots = false;
  std::vector<std::string> trace;  // empty: every parameter
};

const std::vector<std::string> kDefaultTrace{"sigma_mu", "sigma2", "sigma_omega2", "(Intercept)"};

// summary.csv, fit.csv, fit.txt, trace.csv and optional SVGs.
FitReport write_reports(OutputSet& outputs, const fs::path& dir, const std::string& suffix, const ChainSamples& samples,
                        const ObservationDesign& design, const ItemResponseData& data, const ReportOptions& opt) {
  const auto summary = posterior_summary(samples, opt.mcci);
  outputs.write(dir / ("summary" + suffix + ".csv"), render([&](auto& o) { write_summary_csv(o, summary, opt.mcci); }));
  const auto report = fit_report(design, samples, opt.outlier_threshold);
  outputs.write(dir / ("fit" + suffix + ".csv"), render([&](auto& o) { write_fit_csv(o, report, data); }));
  outputs.write(dir / ("fit" + suffix + ".txt"), render([&](auto& o) { write_fit_text(o, report); }));
  std::vector<TraceRow> rows;
  try {
    rows = trace_export(samples, opt.trace);
  } catch (const std::out_of_range& e) {
    throw UsageError(std::string("--trace: ") + e.what());
  }
  outputs.write(dir / ("trace" + suffix + ".csv"), render([&](auto& o) { write_trace_csv(o, rows); }));
  if (opt.plots) {
    std::vector<std::string> boxed;
    for (const auto& p : summary.parameters)
      if (p.name.rfind("theta[", 0) != 0 && p.name.rfind("omega:theta[", 0) != 0 && p.name.rfind("mu[", 0) != 0)
        boxed.push_back(p.name);
    outputs.write(dir / ("boxplot" + suffix + ".svg"), box_plot_svg(summary, boxed));
    const auto names = opt.trace.empty() ? parameter_names(samples) : opt.trace;
    const auto all = parameter_names(samples);
    for (const auto& name : names) {
      const auto it = std::find(all.begin(), all.end(), name);
      const auto chain = parameter_chain(samples, static_cast<std::size_t>(it - all.begin()));
      outputs.write(dir / ("trace_" + file_safe(name) + suffix + ".svg"), trace_plot_svg(name, chain));
    }
  }
  return report;
}

std::vector<std::string> trace_selection(const std::string& text) {
  if (text.empty()) return kDefaultTrace;
  if (text == "all") return {};
  return split_names(text);
}

// ---------------------------------------------------------------------------

struct FitArgs {
  std::string data, covariates, dimensions, model = "auto", out, prior = "1,10,1000,1,0.01", trace;
  long iterations = 62000, burnin = 2000, thin = 5;
  std::uint64_t seed = 1;
  double eps = kDefaultSeriesTolerance, outlier_threshold = 2.0;
  int chains = 1;
  bool plots = false, mcci = false;
};

int do_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
  ChainConfig config;
  config.iterations = a.iterations;
  config.burn_in = a.burnin;
  config.thin = a.thin;
  config.seed = a.seed;
  config.eps = a.eps;
  config.prior = parse_prior(a.prior);
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (a.chains < 1) throw UsageError("--chains must be at least 1");

  std::optional<fs::path> cov, dim;
  if (!a.covariates.empty()) cov = a.covariates;
  if (!a.dimensions.empty()) dim = a.dimensions;
  const auto data = ingest_csv(a.data, cov, dim);
  for (const auto& w : data.warnings) err << "warning: " << w << '\n';
  const ModelKind kind = resolve_model(a.model, data);
  const auto design = build_design(data, kind);
  for (const auto& w : design.warnings) err << "warning: " << w << '\n';

  const fs::path dir = a.out;
  fs::create_directories(dir);

  std::vector<ChainConfig> configs(static_cast<std::size_t>(a.chains), config);
  for (int c = 1; c < a.chains; ++c) configs[c].seed = mix_seed(config.seed, static_cast<std::uint64_t>(c));
  std::vector<ChainSamples> chains(configs.size());
  std::vector<std::exception_ptr> errors(configs.size());
  const unsigned cap = std::max(1u, std::min<unsigned>(worker_threads(), static_cast<unsigned>(configs.size())));
  for (std::size_t start = 0; start < configs.size(); start += cap) {
    std::vector<std::thread> pool;
    for (std::size_t c = start; c < std::min(configs.size(), start + cap); ++c)
      pool.emplace_back([&, c] {
        try {
          chains[c] = run_chain(design, configs[c]);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  OutputSet outputs;
  try {
    const ReportOptions opt{a.outlier_threshold, a.mcci, a.plots, trace_selection(a.trace)};
    for (int c = 0; c < a.chains; ++c) {
      const auto suffix = chain_suffix(c + 1, a.chains);
      const auto& samples = chains[c];
      RunMetadata meta;
      meta.software_version = BNPIRT_VERSION;
      meta.created = utc_timestamp();
      meta.config = samples.config;
      meta.stored_draws = static_cast<long>(samples.draws.size());
      meta.model = to_string(kind);
      meta.responses_path = fs::absolute(a.data).string();
      meta.covariates_path = cov ? fs::absolute(*cov).string() : "";
      meta.dimensions_path = dim ? fs::absolute(*dim).string() : "";
      meta.columns = design.column_labels;
      meta.outlier_threshold = a.outlier_threshold;
      meta.chain = c + 1;
      meta.n_chains = a.chains;
      meta.stats = samples.stats;
      outputs.write(dir / ("samples" + suffix + ".csv"), render([&](auto& o) { write_samples_csv(o, samples); }));
      outputs.write(dir / ("metadata" + suffix + ".json"), to_json(meta).dump(2) + "\n");
      const auto report = write_reports(outputs, dir, suffix, samples, design, data, opt);
      out << "chain " << c + 1 << ": " << samples.draws.size() << " draws, D = " << report.criterion_d
          << " (Gof " << report.gof << ", Penalty " << report.penalty << "), R2 = " << report.r_squared << ", "
          << report.outlier_cells.size() << " outliers\n";
    }
  } catch (...) {
    outputs.rollback();
    throw;
  }
  outputs.commit();
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SummarizeArgs {
  std::string run, out, data, covariates, dimensions, trace;
  int chain = 1;
  bool plots = false, mcci = false;
  std::optional<double> outlier_threshold;
};

int do_summarize(const SummarizeArgs& a, std::ostream& out, std::ostream& err) {
  const fs::path run = a.run;
  RunMetadata probe;
  fs::path meta_path = run / "metadata.json";
  if (!fs::exists(meta_path)) meta_path = run / ("metadata_chain" + std::to_string(a.chain) + ".json");
  std::ifstream meta_in(meta_path);
  if (!meta_in) throw DataError("cannot read run metadata in " + run.string());
  nlohmann::json j;
  try {
    meta_in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(meta_path.string() + ": " + e.what());
  }
  const RunMetadata meta = metadata_from_json(j);
  const auto suffix = chain_suffix(a.chain, meta.n_chains);
  std::ifstream samples_in(run / ("samples" + suffix + ".csv"));
  if (!samples_in) throw DataError("cannot read samples" + suffix + ".csv in " + run.string());
  const auto samples = read_samples_csv(samples_in, meta);

  const std::string responses = a.data.empty() ? meta.responses_path : a.data;
  const std::string covariates = a.covariates.empty() ? meta.covariates_path : a.covariates;
  const std::string dimensions = a.dimensions.empty() ? meta.dimensions_path : a.dimensions;
  std::optional<fs::path> cov, dim;
  if (!covariates.empty()) cov = covariates;
  if (!dimensions.empty()) dim = dimensions;
  const auto data = ingest_csv(responses, cov, dim);
  const auto design = build_design(data, parse_model_kind(meta.model));
  if (design.column_labels != meta.columns)
    throw DataError("data in " + responses + " does not reproduce the design recorded in the run metadata");

  const fs::path dir = a.out.empty() ? run : fs::path(a.out);
  fs::create_directories(dir);
  OutputSet outputs;
  try {
    const ReportOptions opt{a.outlier_threshold.value_or(meta.outlier_threshold), a.mcci, a.plots,
                            trace_selection(a.trace)};
    const auto report = write_reports(outputs, dir, suffix, samples, design, data, opt);
    out << samples.draws.size() << " draws, D = " << report.criterion_d << ", R2 = " << report.r_squared << '\n';
  } catch (...) {
    outputs.rollback();
    throw;
  }
  outputs.commit();
  (void)err;
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  int persons = 50, items = 5;
  std::uint64_t seed = 1;
  std::string out, prior = "1,10,1000,1,0.01", params;
  std::optional<double> ability_sd, difficulty_sd, sigma2;
  double sigma_omega2 = 1.0;
  bool mu_zero = false;
};

nlohmann::json truth_to_json(const ParameterState& zeta, const ObservationDesign& design, int persons, int items,
                             std::uint64_t seed) {
  std::vector<std::string> labels;
  for (const auto& l : design.column_labels) labels.push_back(l.name);
  return {{"persons", persons},
          {"items", items},
          {"seed", seed},
          {"labels", labels},
          {"beta", std::vector<double>(zeta.beta.data(), zeta.beta.data() + zeta.beta.size())},
          {"beta_omega", std::vector<double>(zeta.beta_omega.data(), zeta.beta_omega.data() + zeta.beta_omega.size())},
          {"sigma_mu", zeta.sigma_mu},
          {"sigma2", zeta.sigma2},
          {"sigma_omega2", zeta.sigma_omega2},
          {"mu", zeta.mu.values()}};
}

ParameterState truth_from_json(const nlohmann::json& j, int dimension) {
  try {
    ParameterState zeta(dimension);
    const auto beta = j.at("beta").get<std::vector<double>>();
    const auto beta_omega = j.at("beta_omega").get<std::vector<double>>();
    if (static_cast<int>(beta.size()) != dimension || static_cast<int>(beta_omega.size()) != dimension)
      throw UsageError("--params: coefficient vectors must have length " + std::to_string(dimension));
    zeta.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), dimension);
    zeta.beta_omega = Eigen::Map<const Eigen::VectorXd>(beta_omega.data(), dimension);
    zeta.sigma_mu = j.at("sigma_mu").get<double>();
    zeta.sigma2 = j.at("sigma2").get<double>();
    zeta.sigma_omega2 = j.at("sigma_omega2").get<double>();
    zeta.mu = LocationWindow(j.at("mu").get<std::vector<double>>());
    return zeta;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("--params: ") + e.what());
  }
}

int do_simulate(const SimulateArgs& a, std::ostream& out) {
  if (a.persons < 1 || a.items < 1) throw UsageError("--persons and --items must be positive");
  const PriorConfig prior = parse_prior(a.prior);

  ItemResponseData skeleton;
  skeleton.n_persons = a.persons;
  skeleton.n_items = a.items;
  skeleton.category_counts.assign(a.items, 1);
  for (int p = 1; p <= a.persons; ++p) skeleton.person_ids.push_back(std::to_string(p));
  for (int i = 1; i <= a.items; ++i) skeleton.item_ids.push_back(std::to_string(i));
  for (int p = 0; p < a.persons; ++p)
    for (int i = 0; i < a.items; ++i) skeleton.observations.push_back({p, i, 0});
  const auto design = build_dichotomous(skeleton);
  const int dim = design.dimension();

  Rng rng(a.seed, Stream::kSimulate, 0);
  ParameterState zeta(dim);
  if (!a.params.empty()) {
    std::ifstream in(a.params);
    if (!in) throw DataError("cannot read " + a.params);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw DataError(a.params + ": " + e.what());
    }
    zeta = truth_from_json(j, dim);
  } else {
    zeta.sigma_mu = rng.uniform(0.0, prior.b_sigma_mu);
    zeta.sigma2 = a.sigma2 ? *a.sigma2 : rng.inverse_gamma(0.5 * prior.a0, 0.5 * prior.a0);
    zeta.sigma_omega2 = a.sigma_omega2;
    if (!(zeta.sigma2 > 0.0) || !std::isfinite(zeta.sigma2)) throw UsageError("sigma2 must be positive and finite");
    if (!(zeta.sigma_omega2 > 0.0) || !std::isfinite(zeta.sigma_omega2))
      throw UsageError("sigma_omega2 must be positive and finite");
    const double slope_sd = std::sqrt(zeta.sigma2 * prior.v);
    zeta.beta[0] = 0.0;
    for (int p = 0; p < a.persons; ++p) zeta.beta[1 + p] = rng.normal(0.0, a.ability_sd.value_or(slope_sd));
    for (int i = 0; i < a.items; ++i) zeta.beta[1 + a.persons + i] = rng.normal(0.0, a.difficulty_sd.value_or(slope_sd));
    const double weight_sd = std::sqrt(zeta.sigma_omega2 * prior.v_omega);
    for (int c = 0; c < dim; ++c) zeta.beta_omega[c] = rng.normal(0.0, weight_sd);
    zeta.mu = LocationWindow({rng.normal(0.0, zeta.sigma_mu)});
  }
  if (!(zeta.sigma2 > 0.0) || !std::isfinite(zeta.sigma2)) throw UsageError("sigma2 must be positive and finite");
  if (!(zeta.sigma_omega2 > 0.0)) throw UsageError("sigma_omega2 must be positive");

  // Materialize every location the responses can touch before drawing them.
  const Eigen::VectorXd eta = design.x * zeta.beta_omega;
  Rng extension(a.seed, Stream::kSimulate, 1);
  cover_weight_window(zeta, eta.minCoeff(), kDefaultSeriesTolerance, extension);
  cover_weight_window(zeta, eta.maxCoeff(), kDefaultSeriesTolerance, extension);
  if (a.mu_zero) zeta.mu = LocationWindow(std::vector<double>(zeta.mu.values().size(), 0.0));

  Rng coin(a.seed, Stream::kSimulate, 2);
  std::ostringstream responses;
  responses << "person,item,score\n";
  const Eigen::VectorXd x_beta = design.x * zeta.beta;
  for (std::size_t k = 0; k < design.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    const double p = response_probability_from_predictors(x_beta[r], eta[r], zeta, kDefaultSeriesTolerance);
    const int u = coin.uniform() < p ? 1 : 0;
    responses << design.rows[k].person + 1 << ',' << design.rows[k].item + 1 << ',' << u << '\n';
  }

  const fs::path dir = a.out;
  fs::create_directories(dir);
  OutputSet outputs;
  try {
    outputs.write(dir / "responses.csv", responses.str());
    outputs.write(dir / "truth.json", truth_to_json(zeta, design, a.persons, a.items, a.seed).dump(2) + "\n");
  } catch (...) {
    outputs.rollback();
    throw;
  }
  outputs.commit();
  out << "simulated " << design.size() << " responses for " << a.persons << " persons and " << a.items << " items\n";
  return kExitOk;
}

// Splices "--key=value" tokens from a --config file in front of the
// command-line flags so that later flags win.
std::vector<std::string> expand_config(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  if (args.size() < 2) return args;
  std::string path;
  for (std::size_t k = 2; k < args.size(); ++k) {
    if (args[k] == "--config" && k + 1 < args.size()) path = args[k + 1];
    else if (args[k].rfind("--config=", 0) == 0) path = args[k].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw DataError("cannot read config file " + path);
  std::vector<std::string> injected;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#' || line[first] == ';' || line[first] == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(path, number, "expected key = value");
    auto trim = [](std::string t) {
      const auto b = t.find_first_not_of(" \t\r\"");
      const auto e = t.find_last_not_of(" \t\r\"");
      return b == std::string::npos ? std::string{} : t.substr(b, e - b + 1);
    };
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(path, number, "empty key");
    injected.push_back("--" + key + "=" + value);
  }
  args.insert(args.begin() + 2, injected.begin(), injected.end());
  return args;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  }
  CLI::App app{"Bayesian nonparametric IRT: slice-sampling MCMC fits, simulation and posterior summaries", "bnpirt"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_version_flag("--version", BNPIRT_VERSION);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit the model to a responses file");
  fit_cmd->add_option("--config", "Flat key = value file; command-line flags take precedence");
  fit_cmd->add_option("--data", fit.data, "Responses CSV (person,item,score)")->required();
  fit_cmd->add_option("--covariates", fit.covariates, "Person covariates CSV (person,<names>...)");
  fit_cmd->add_option("--dimensions", fit.dimensions, "Item dimensions CSV (item,dimension)");
  fit_cmd->add_option("--model", fit.model, "auto | dichotomous | polytomous | multidimensional")->capture_default_str();
  fit_cmd->add_option("--iterations", fit.iterations)->capture_default_str();
  fit_cmd->add_option("--burnin", fit.burnin)->capture_default_str();
  fit_cmd->add_option("--thin", fit.thin)->capture_default_str();
  fit_cmd->add_option("--seed", fit.seed)->capture_default_str();
  fit_cmd->add_option("--prior", fit.prior, "b_sigma_mu,v,a0,v_omega,a_omega")->capture_default_str();
  fit_cmd->add_option("--eps", fit.eps, "Mixture series truncation tolerance")->capture_default_str();
  fit_cmd->add_option("--outlier-threshold", fit.outlier_threshold)->capture_default_str();
  fit_cmd->add_option("--chains", fit.chains)->capture_default_str();
  fit_cmd->add_option("--out", fit.out, "Output directory")->required();
  fit_cmd->add_flag("--plots", fit.plots, "Write box-plot and trace-plot SVGs");
  fit_cmd->add_flag("--mcci", fit.mcci, "Add batch-means half-width columns to the summary");
  fit_cmd->add_option("--trace", fit.trace, "Comma-separated parameters to trace, or 'all'");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate dichotomous responses from the model");
  sim_cmd->add_option("--config", "Flat key = value file; command-line flags take precedence");
  sim_cmd->add_option("--persons", sim.persons)->capture_default_str();
  sim_cmd->add_option("--items", sim.items)->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed)->capture_default_str();
  sim_cmd->add_option("--prior", sim.prior)->capture_default_str();
  sim_cmd->add_option("--params", sim.params, "Fixed parameter file (the truth.json format)");
  sim_cmd->add_option("--ability-sd", sim.ability_sd, "Draw abilities from N(0, sd^2) instead of the prior");
  sim_cmd->add_option("--difficulty-sd", sim.difficulty_sd, "Draw difficulties from N(0, sd^2) instead of the prior");
  sim_cmd->add_option("--sigma2", sim.sigma2, "Fix the kernel variance");
  sim_cmd->add_option("--sigma-omega2", sim.sigma_omega2, "Mixture-weight probit variance")->capture_default_str();
  sim_cmd->add_flag("--mu-zero", sim.mu_zero, "Set every mixture location to zero (normal-ogive Rasch data)");
  sim_cmd->add_option("--out", sim.out, "Output directory")->required();

  SummarizeArgs sum;
  auto* sum_cmd = app.add_subcommand("summarize", "Regenerate reports from a stored run");
  sum_cmd->add_option("--run", sum.run, "Directory written by fit")->required();
  sum_cmd->add_option("--out", sum.out, "Output directory (default: the run directory)");
  sum_cmd->add_option("--data", sum.data, "Override the responses path recorded in the metadata");
  sum_cmd->add_option("--covariates", sum.covariates);
  sum_cmd->add_option("--dimensions", sum.dimensions);
  sum_cmd->add_option("--chain", sum.chain)->capture_default_str();
  sum_cmd->add_option("--outlier-threshold", sum.outlier_threshold);
  sum_cmd->add_flag("--plots", sum.plots);
  sum_cmd->add_flag("--mcci", sum.mcci);
  sum_cmd->add_option("--trace", sum.trace);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*fit_cmd) return do_fit(fit, out, err);
    if (*sim_cmd) return do_simulate(sim, out);
    if (*sum_cmd) return do_summarize(sum, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const WrongBuilderError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::domain_error& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace bnpirt
