#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bnpirt/cli.hpp"
#include "bnpirt/errors.hpp"
#include "bnpirt/samples_io.hpp"
#include "bnpirt/svg.hpp"
#include "oracles.hpp"

using namespace bnpirt;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("bnpirt_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "bnpirt");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

const char* kToy = "person,item,score\n1,1,1\n1,2,0\n2,1,0\n2,2,1\n3,1,1\n3,2,1\n4,1,0\n4,2,0\n5,1,1\n5,2,0\n";

ChainSamples small_chain() {
  ItemResponseData d;
  d.n_persons = 2;
  d.n_items = 2;
  d.category_counts = {1, 1};
  d.person_ids = {"1", "2"};
  d.item_ids = {"1", "2"};
  d.observations = {{0, 0, 1}, {0, 1, 0}, {1, 0, 0}, {1, 1, 1}};
  ChainConfig config;
  config.iterations = 200;
  config.burn_in = 50;
  config.thin = 3;
  return run_chain(build_dichotomous(d), config);
}

}  // namespace

TEST_CASE("samples CSV round trip") {
  const auto chain = small_chain();
  RunMetadata meta;
  meta.config = chain.config;
  meta.stored_draws = static_cast<long>(chain.draws.size());
  meta.columns = chain.column_labels;
  meta.model = "dichotomous";
  std::stringstream csv;
  write_samples_csv(csv, chain);
  const auto back = read_samples_csv(csv, meta);
  REQUIRE(back.draws.size() == chain.draws.size());
  for (std::size_t k = 0; k < chain.draws.size(); ++k) {
    CHECK(back.draws[k].beta == chain.draws[k].beta);
    CHECK(back.draws[k].beta_omega == chain.draws[k].beta_omega);
    CHECK(back.draws[k].mu == chain.draws[k].mu);
    CHECK(back.draws[k].sigma_mu == chain.draws[k].sigma_mu);
  }
  std::stringstream again;
  write_samples_csv(again, back);
  std::stringstream first;
  write_samples_csv(first, chain);
  CHECK(again.str() == first.str());

  meta.stored_draws += 1;
  std::stringstream csv2(first.str());
  CHECK_THROWS_AS(read_samples_csv(csv2, meta), DataError);
}

TEST_CASE("metadata JSON round trip") {
  RunMetadata meta;
  meta.software_version = "x";
  meta.config.seed = 123456789012345ULL;
  meta.config.prior.a0 = 7.5;
  meta.stored_draws = 12;
  meta.model = "polytomous";
  meta.columns = small_chain().column_labels;
  meta.stats.slice_shrinks = 4;
  const auto back = metadata_from_json(to_json(meta));
  CHECK(back.config.seed == meta.config.seed);
  CHECK(back.config.prior == meta.config.prior);
  CHECK(back.columns == meta.columns);
  CHECK(back.stats == meta.stats);
  CHECK_THROWS_AS(metadata_from_json(nlohmann::json{{"model", 3}}), DataError);
}

TEST_CASE("exact formatting round-trips doubles") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) CHECK(std::stod(format_exact(v)) == v);
}

TEST_CASE("svg output") {
  const auto chain = small_chain();
  const auto summary = posterior_summary(chain, false);
  const auto box = box_plot_svg(summary, {"sigma2", "sigma_mu"});
  CHECK(box.find("<svg") != std::string::npos);
  CHECK(box.find("sigma2") != std::string::npos);
  std::vector<double> long_chain(20000, 1.0);
  const auto trace = trace_plot_svg("x", long_chain, 100);
  CHECK(trace.find("</svg>") != std::string::npos);
}

TEST_CASE("cli usage errors") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"fit", "--out", "x"}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("cli fit, summarize and determinism") {
  TempDir dir("cli_fit");
  write(dir.path / "r.csv", kToy);
  const std::vector<std::string> common{"fit", "--data", (dir.path / "r.csv").string(), "--iterations", "400",
                                        "--burnin", "100", "--thin", "2", "--seed", "7"};
  auto args = common;
  args.insert(args.end(), {"--out", (dir.path / "a").string(), "--model", "dichotomous"});
  auto r = cli(args);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  for (const char* f : {"samples.csv", "metadata.json", "summary.csv", "fit.csv", "fit.txt", "trace.csv"})
    CHECK_MESSAGE(fs::exists(dir.path / "a" / f), f);
  const auto meta = nlohmann::json::parse(slurp(dir.path / "a" / "metadata.json"));
  CHECK(meta.at("stored_draws") == 150);

  args = common;
  args.insert(args.end(), {"--out", (dir.path / "b").string()});
  REQUIRE(cli(args).code == 0);
  CHECK(slurp(dir.path / "a" / "samples.csv") == slurp(dir.path / "b" / "samples.csv"));
  CHECK(slurp(dir.path / "a" / "fit.csv") == slurp(dir.path / "b" / "fit.csv"));

  r = cli({"summarize", "--run", (dir.path / "a").string(), "--out", (dir.path / "s").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(slurp(dir.path / "a" / "summary.csv") == slurp(dir.path / "s" / "summary.csv"));
  CHECK(slurp(dir.path / "a" / "fit.txt") == slurp(dir.path / "s" / "fit.txt"));

  r = cli({"summarize", "--run", (dir.path / "a").string(), "--out", (dir.path / "m").string(), "--mcci"});
  REQUIRE(r.code == 0);
  CHECK(slurp(dir.path / "m" / "summary.csv").find("mean_hw") != std::string::npos);

  r = cli({"summarize", "--run", (dir.path / "a").string(), "--out", (dir.path / "t").string(), "--trace", "nope"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("nope") != std::string::npos);
  CHECK_FALSE(fs::exists(dir.path / "t" / "summary.csv"));

  write(dir.path / "other.csv", "person,item,score\n1,1,1\n2,1,0\n");
  r = cli({"summarize", "--run", (dir.path / "a").string(), "--data", (dir.path / "other.csv").string()});
  CHECK(r.code == kExitData);
}

TEST_CASE("cli config file with flag precedence") {
  TempDir dir("cli_config");
  write(dir.path / "r.csv", kToy);
  write(dir.path / "run.cfg", "# toy run\niterations = 300\nburnin = 100\nthin = 4\nseed = 3\nplots = true\n");
  const auto r = cli({"fit", "--config", (dir.path / "run.cfg").string(), "--data", (dir.path / "r.csv").string(),
                      "--thin", "2", "--out", (dir.path / "o").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto meta = nlohmann::json::parse(slurp(dir.path / "o" / "metadata.json"));
  CHECK(meta.at("iterations") == 300);
  CHECK(meta.at("thin") == 2);
  CHECK(meta.at("stored_draws") == 100);
  CHECK(fs::exists(dir.path / "o" / "boxplot.svg"));
}

TEST_CASE("cli multiple chains get suffixed outputs") {
  TempDir dir("cli_chains");
  write(dir.path / "r.csv", kToy);
  const auto r = cli({"fit", "--data", (dir.path / "r.csv").string(), "--iterations", "200", "--burnin", "50",
                      "--chains", "2", "--out", (dir.path / "o").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(fs::exists(dir.path / "o" / "samples_chain1.csv"));
  CHECK(fs::exists(dir.path / "o" / "samples_chain2.csv"));
  CHECK(slurp(dir.path / "o" / "samples_chain1.csv") != slurp(dir.path / "o" / "samples_chain2.csv"));
  CHECK(cli({"summarize", "--run", (dir.path / "o").string(), "--chain", "2"}).code == 0);
}

TEST_CASE("cli data errors remove partial output") {
  TempDir dir("cli_data");
  write(dir.path / "r.csv", "person,item,score\n1,1,1\n1,1,0\n");
  const auto r = cli({"fit", "--data", (dir.path / "r.csv").string(), "--out", (dir.path / "o").string()});
  CHECK(r.code == kExitData);
  CHECK(r.err.find("r.csv:3:") != std::string::npos);
  CHECK(r.err.find("duplicate") != std::string::npos);
  CHECK((!fs::exists(dir.path / "o") || fs::is_empty(dir.path / "o")));
  CHECK(cli({"fit", "--data", (dir.path / "missing.csv").string(), "--out", (dir.path / "o").string()}).code ==
        kExitData);
}

TEST_CASE("cli simulate") {
  TempDir dir("cli_sim");
  auto r = cli({"simulate", "--persons", "50", "--items", "5", "--seed", "4", "--out", (dir.path / "a").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  REQUIRE(cli({"simulate", "--persons", "50", "--items", "5", "--seed", "4", "--out", (dir.path / "b").string()}).code == 0);
  const auto csv = slurp(dir.path / "a" / "responses.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 251);
  CHECK(csv == slurp(dir.path / "b" / "responses.csv"));
  CHECK(slurp(dir.path / "a" / "truth.json") == slurp(dir.path / "b" / "truth.json"));

  CHECK(cli({"simulate", "--persons", "0", "--out", (dir.path / "c").string()}).code == kExitUsage);
  CHECK(cli({"simulate", "--sigma2", "0", "--out", (dir.path / "c").string()}).code == kExitUsage);
  CHECK_FALSE(fs::exists(dir.path / "c" / "responses.csv"));
}

TEST_CASE("simulate with zero locations follows the normal ogive") {
  TempDir dir("cli_ogive");
  const int persons = 4000;
  nlohmann::json truth;
  std::vector<double> beta(1 + persons + 3, 0.0), omega(beta.size(), 0.0);
  for (int p = 0; p < persons; ++p) beta[1 + p] = 0.5;
  beta[1 + persons] = -1.0;
  beta[2 + persons] = 0.0;
  beta[3 + persons] = 1.0;
  truth = {{"beta", beta}, {"beta_omega", omega}, {"sigma_mu", 0.5}, {"sigma2", 1.0}, {"sigma_omega2", 1.0},
           {"mu", std::vector<double>(21, 0.3)}};
  write(dir.path / "truth.json", truth.dump());
  const auto r = cli({"simulate", "--persons", std::to_string(persons), "--items", "3", "--params",
                      (dir.path / "truth.json").string(), "--mu-zero", "--out", (dir.path / "o").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto data = ingest_csv(dir.path / "o" / "responses.csv");
  std::vector<double> ones(3, 0.0);
  for (const auto& o : data.observations) ones[o.item] += o.score;
  for (int i = 0; i < 3; ++i) {
    const double b = -1.0 + i;
    const double p = oracle::phi_cdf(0.5 - b);
    const double se = std::sqrt(p * (1 - p) / persons);
    CHECK(std::abs(ones[i] / persons - p) < 4 * se);
  }
}
