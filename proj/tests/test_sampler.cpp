#include <doctest.h>

#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "bnpirt/errors.hpp"
#include "bnpirt/sampler.hpp"
#include "oracles.hpp"
#include "toy.hpp"

using namespace bnpirt;
using doctest::Approx;

namespace {

constexpr int kDraws = 100000;

double ig_cdf(double x, double shape, double rate) { return x <= 0 ? 0.0 : boost::math::gamma_q(shape, rate / x); }

ItemResponseData two_by_two() {
  ItemResponseData d;
  d.n_persons = 2;
  d.n_items = 2;
  d.category_counts = {1, 1};
  d.person_ids = {"1", "2"};
  d.item_ids = {"1", "2"};
  d.observations = {{0, 0, 1}, {0, 1, 0}, {1, 0, 0}, {1, 1, 1}};
  return d;
}

}  // namespace

TEST_CASE("xi sequence") {
  CHECK(xi(0) == 1.0);
  CHECK(xi(1) == Approx(0.3678794).epsilon(1e-7));
  CHECK(xi(3) == Approx(0.0497871).epsilon(1e-6));
  for (long l = 0; l < 50; ++l) CHECK(xi(l + 1) < xi(l));
  CHECK_THROWS_AS(xi(-1), std::invalid_argument);
}

TEST_CASE("compute_n_max") {
  CHECK(compute_n_max(std::vector<double>{0.9, 0.5}) == 0);
  CHECK(compute_n_max(std::vector<double>{0.2, 0.7}) == 1);
  CHECK(compute_n_max(std::vector<double>{0.05}) == 2);
  CHECK(n_max_from_log(-2.5) == 2);
  CHECK(n_max_from_log(-2.0) == 1);
  for (double u : {0.9, 0.3, 0.01, 1e-7}) {
    const long n = compute_n_max(std::vector<double>{u});
    CHECK(xi(n) > u);
    CHECK(xi(n + 1) <= u);
  }
}

TEST_CASE("update_u_slice respects xi bounds and is uniform") {
  Rng rng(1);
  auto s = toy::latents(3);
  s.z = {0, 2, -2};
  std::vector<double> scaled;
  for (int t = 0; t < kDraws; ++t) {
    update_u_slice(s, rng);
    REQUIRE(s.u_slice(0) > 0.0);
    REQUIRE(s.u_slice(0) < 1.0);
    REQUIRE(s.u_slice(1) < std::exp(-2.0));
    REQUIRE(s.u_slice(2) < std::exp(-2.0));
    scaled.push_back(s.u_slice(1) / std::exp(-2.0));
  }
  CHECK(oracle::ks_pvalue(scaled, [](double x) { return std::clamp(x, 0.0, 1.0); }) > 0.01);
}

TEST_CASE("update_u_star truncation") {
  Rng rng(2);
  ParameterState zeta(1);
  auto d = toy::design(Eigen::MatrixXd::Ones(2, 1), {1, 0});
  auto s = toy::latents(2);
  std::vector<double> pos;
  for (int t = 0; t < kDraws; ++t) {
    update_u_star(s, zeta, d, rng);
    REQUIRE(s.u_star[0] > 0.0);
    REQUIRE(s.u_star[1] <= 0.0);
    pos.push_back(s.u_star[0]);
  }
  CHECK(oracle::mean(pos) == Approx(0.7979).epsilon(0.01 / 0.7979));

  zeta.beta[0] = 10.0;
  std::vector<double> far;
  for (int t = 0; t < kDraws; ++t) {
    update_u_star(s, zeta, d, rng);
    far.push_back(s.u_star[0]);
  }
  CHECK(oracle::ks_pvalue(far, [](double x) { return oracle::phi_cdf(x - 10.0); }) > 0.01);
}

TEST_CASE("update_z with a single feasible index") {
  Rng rng(3), ext(4);
  ParameterState zeta(1);
  zeta.beta_omega[0] = 3.0;  // weights favour far cells, but the slice forbids them
  auto d = toy::design(Eigen::MatrixXd::Ones(1, 1), {1});
  auto s = toy::latents(1);
  s.log_u_slice[0] = -0.9;
  s.n_max = 0;
  for (int t = 0; t < 1000; ++t) {
    update_z(s, zeta, d, rng, ext);
    REQUIRE(s.z[0] == 0);
  }
}

TEST_CASE("update_z selection frequencies") {
  // Slice admits {-1, 0, 1}; omega puts 1/2 on cells 0 and 1 and nothing on
  // -1. With mu_1^2 = 2(1 + log 3) the unnormalized weights are 0.6c and 0.2c.
  Rng rng(5), ext(6);
  ParameterState zeta(1);
  zeta.mu = LocationWindow({0.0, 0.0, std::sqrt(2.0 * (1.0 + std::log(3.0)))});
  zeta.sigma_omega2 = 1e-16;
  auto d = toy::design(Eigen::MatrixXd::Ones(1, 1), {1});
  auto s = toy::latents(1);
  s.log_u_slice[0] = -1.5;
  s.n_max = 1;
  std::vector<long> counts(3, 0);
  for (int t = 0; t < kDraws; ++t) {
    update_z(s, zeta, d, rng, ext);
    REQUIRE(std::labs(s.z[0]) <= 1);
    ++counts[static_cast<std::size_t>(s.z[0] + 1)];
  }
  CHECK(counts[0] == 0);
  CHECK(counts[1] / double(kDraws) == Approx(0.75).epsilon(0.01));
  CHECK(oracle::chi_square_pvalue(counts, {0.0, 0.75, 0.25}) > 0.01);
}

TEST_CASE("update_z keeps every draw inside the slice") {
  Rng rng(7), ext(8);
  ParameterState zeta(1);
  zeta.sigma_omega2 = 9.0;
  auto d = toy::design(Eigen::MatrixXd::Ones(5, 1), {1, 0, 1, 1, 0});
  auto s = toy::latents(5);
  for (int t = 0; t < 2000; ++t) {
    update_u_slice(s, rng);
    s.n_max = n_max_from_log(*std::min_element(s.log_u_slice.begin(), s.log_u_slice.end()));
    update_z(s, zeta, d, rng, ext);
    for (std::size_t k = 0; k < s.size(); ++k) REQUIRE(s.log_u_slice[k] < -static_cast<double>(std::labs(s.z[k])));
    update_u_star(s, zeta, d, rng);
  }
  CHECK(zeta.mu.half_width() >= 1);
}

TEST_CASE("update_mu conjugate draws") {
  Rng rng(9);
  ParameterState zeta(1);
  zeta.sigma_mu = 1.0;
  zeta.mu = LocationWindow({0.0, 0.0, 0.0});
  auto d = toy::design(Eigen::MatrixXd::Ones(1, 1), {1});
  auto s = toy::latents(1);
  s.z[0] = 0;
  s.u_star[0] = 1.0;
  std::vector<double> assigned, empty;
  for (int t = 0; t < kDraws; ++t) {
    update_mu(zeta, s, d, rng);
    assigned.push_back(zeta.mu[0]);
    empty.push_back(zeta.mu[1]);
  }
  CHECK(oracle::ks_pvalue(assigned, [](double x) { return oracle::phi_cdf((x - 0.5) / std::sqrt(0.5)); }) > 0.01);
  CHECK(oracle::ks_pvalue(empty, oracle::phi_cdf) > 0.01);
}

TEST_CASE("update_sigma_mu stays in its support and matches the grid") {
  Rng rng(10);
  ParameterState zeta(1);
  zeta.mu = LocationWindow({0.3});
  std::vector<double> draws;
  for (int t = 0; t < 3 * kDraws; ++t) {
    update_sigma_mu(zeta, 1.0, rng);
    REQUIRE(zeta.sigma_mu > 0.0);
    REQUIRE(zeta.sigma_mu < 1.0);
    if (t % 3 == 0) draws.push_back(zeta.sigma_mu);
  }
  const oracle::GridCdf cdf([](double s) { return -std::log(s) - 0.045 / (s * s); }, 1e-6, 1.0);
  CHECK(oracle::ks_pvalue(draws, cdf) > 0.01);
}

TEST_CASE("update_sigma_mu concentrates near the root mean square") {
  Rng rng(11);
  ParameterState zeta(1);
  std::vector<double> mu(41);
  for (auto& m : mu) m = rng.normal(0.0, 0.1);
  double m2 = 0.0;
  for (double m : mu) m2 += m * m / 41.0;
  zeta.mu = LocationWindow(mu);
  SamplerStats stats;
  double mean = 0.0;
  for (int t = 0; t < 20000; ++t) {
    update_sigma_mu(zeta, 1.0, rng, &stats);
    mean += zeta.sigma_mu / 20000.0;
  }
  CHECK(mean == Approx(std::sqrt(m2)).epsilon(0.06));
  CHECK(stats.slice_evaluations > 0);
}

TEST_CASE("conjugate system draws") {
  Rng rng(12);
  SUBCASE("prior only") {
    const ConjugateSystem sys(Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Constant(1, 1.0 / 10.0));
    std::vector<double> draws;
    for (int t = 0; t < kDraws; ++t) draws.push_back(sys.draw(Eigen::VectorXd::Zero(1), 2.0, rng)[0]);
    CHECK(oracle::ks_pvalue(draws, [](double x) { return oracle::phi_cdf(x / std::sqrt(20.0)); }) > 0.01);
  }
  SUBCASE("one observation") {
    const ConjugateSystem sys(Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Ones(1));
    std::vector<double> draws;
    for (int t = 0; t < kDraws; ++t) draws.push_back(sys.draw(Eigen::VectorXd::Ones(1), 1.0, rng)[0]);
    CHECK(oracle::ks_pvalue(draws, [](double x) { return oracle::phi_cdf((x - 0.5) / std::sqrt(0.5)); }) > 0.01);
  }
}

TEST_CASE("flat intercept without data is singular") {
  const auto d = toy::empty_design(2);
  try {
    coefficient_system(d, PriorConfig{});
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("(Intercept)") != std::string::npos);
  }
}

TEST_CASE("update_beta averages to the normal-equations solution") {
  Eigen::MatrixXd x(5, 2);
  x << 1, -1.0, 1, -0.3, 1, 0.2, 1, 0.9, 1, 1.4;
  const auto d = toy::design(x, {1, 0, 1, 1, 0});
  PriorConfig prior;
  const auto sys = coefficient_system(d, prior);
  ParameterState zeta(2);
  zeta.sigma2 = 0.7;
  auto s = toy::latents(5);
  s.u_star = {0.4, -1.2, 0.3, 2.0, -0.1};
  Rng rng(13);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
  for (int t = 0; t < kDraws; ++t) {
    update_beta(zeta, s, d, sys, rng);
    mean += zeta.beta / kDraws;
  }
  Eigen::MatrixXd a = x.transpose() * x;
  a(1, 1) += 1.0 / prior.v;
  const Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(s.u_star.data(), 5);
  const Eigen::VectorXd solution = a.colPivHouseholderQr().solve(x.transpose() * y);
  const Eigen::VectorXd sd = (0.7 * a.inverse()).diagonal().cwiseSqrt();
  for (int c = 0; c < 2; ++c) CHECK(std::abs(mean[c] - solution[c]) < 4 * sd[c] / std::sqrt(double(kDraws)));
}

TEST_CASE("update_sigma2") {
  Rng rng(14);
  SUBCASE("no data and no slopes gives the prior") {
    const auto d = toy::empty_design(1);
    ParameterState zeta(1);
    PriorConfig prior;
    prior.a0 = 3.0;
    auto s = toy::latents(0);
    std::vector<double> draws;
    for (int t = 0; t < kDraws; ++t) {
      update_sigma2(zeta, s, d, prior, rng);
      draws.push_back(zeta.sigma2);
    }
    CHECK(oracle::ks_pvalue(draws, [](double x) { return ig_cdf(x, 1.5, 1.5); }) > 0.01);
  }
  SUBCASE("one unit residual") {
    const auto d = toy::design(Eigen::MatrixXd::Ones(1, 1), {1});
    ParameterState zeta(1);
    PriorConfig prior;
    prior.a0 = 2.0;
    auto s = toy::latents(1);
    s.u_star[0] = 1.0;
    std::vector<double> draws;
    for (int t = 0; t < kDraws; ++t) {
      update_sigma2(zeta, s, d, prior, rng);
      draws.push_back(zeta.sigma2);
    }
    CHECK(oracle::ks_pvalue(draws, [](double x) { return ig_cdf(x, 1.5, 1.5); }) > 0.01);
    // Shape 1.5 has no variance, so only a loose check on the mean.
    CHECK(oracle::mean(draws) == Approx(3.0).epsilon(0.1));
  }
}

TEST_CASE("update_z_star bounds and moments") {
  Rng rng(15);
  ParameterState zeta(1);
  auto d = toy::design(Eigen::MatrixXd::Ones(2, 1), {1, 1});
  auto s = toy::latents(2);
  s.z = {1, 10};
  std::vector<double> inner;
  for (int t = 0; t < kDraws; ++t) {
    update_z_star(s, zeta, d, rng);
    REQUIRE(s.z_star[0] > 0.0);
    REQUIRE(s.z_star[0] < 1.0);
    REQUIRE(s.z_star[1] > 9.0);
    REQUIRE(s.z_star[1] < 10.0);
    inner.push_back(s.z_star[0]);
  }
  const double mass = oracle::phi_cdf(1.0) - 0.5;
  const double tn_mean = (oracle::phi_pdf(0.0) - oracle::phi_pdf(1.0)) / mass;
  CHECK(tn_mean == Approx(0.4598).epsilon(1e-3));
  CHECK(std::abs(oracle::mean(inner) - tn_mean) < 0.01);
}

TEST_CASE("update_beta_omega") {
  Rng rng(16);
  PriorConfig prior;
  SUBCASE("no observations gives the prior") {
    const auto d = toy::empty_design(2);
    const auto sys = weight_coefficient_system(d, prior);
    ParameterState zeta(2);
    zeta.sigma_omega2 = 4.0;
    auto s = toy::latents(0);
    std::vector<double> draws;
    for (int t = 0; t < kDraws; ++t) {
      update_beta_omega(zeta, s, d, sys, rng);
      draws.push_back(zeta.beta_omega[1]);
    }
    CHECK(oracle::ks_pvalue(draws, [](double x) { return oracle::phi_cdf(x / 2.0); }) > 0.01);
  }
  SUBCASE("one observation") {
    const auto d = toy::design(Eigen::MatrixXd::Ones(1, 1), {1});
    const auto sys = weight_coefficient_system(d, prior);
    ParameterState zeta(1);
    auto s = toy::latents(1);
    s.z_star[0] = 1.0;
    std::vector<double> draws;
    for (int t = 0; t < kDraws; ++t) {
      update_beta_omega(zeta, s, d, sys, rng);
      draws.push_back(zeta.beta_omega[0]);
    }
    CHECK(oracle::ks_pvalue(draws, [](double x) { return oracle::phi_cdf((x - 0.5) / std::sqrt(0.5)); }) > 0.01);
  }
}

TEST_CASE("update_sigma_omega2") {
  Rng rng(17);
  PriorConfig prior;
  SUBCASE("zero-dimensional prior draw") {
    const auto d = toy::empty_design(0);
    ParameterState zeta(0);
    auto s = toy::latents(0);
    std::vector<double> draws;
    for (int t = 0; t < kDraws; ++t) {
      update_sigma_omega2(zeta, s, d, prior, rng);
      draws.push_back(zeta.sigma_omega2);
    }
    CHECK(oracle::ks_pvalue(draws, [](double x) { return ig_cdf(x, 0.005, 0.005); }) > 0.01);
  }
  SUBCASE("one unit residual") {
    const auto d = toy::design(Eigen::MatrixXd::Zero(1, 0), {1});
    ParameterState zeta(0);
    auto s = toy::latents(1);
    s.z_star[0] = 1.0;
    std::vector<double> draws;
    for (int t = 0; t < kDraws; ++t) {
      update_sigma_omega2(zeta, s, d, prior, rng);
      draws.push_back(zeta.sigma_omega2);
    }
    CHECK(oracle::ks_pvalue(draws, [](double x) { return ig_cdf(x, 0.505, 0.505); }) > 0.01);
  }
}

TEST_CASE("latent invariant checker") {
  const auto d = toy::design(Eigen::MatrixXd::Ones(2, 1), {1, 0});
  auto s = toy::latents(2);
  s.u_star = {0.5, -0.5};
  s.z_star = {-0.5, -0.5};
  CHECK_FALSE(check_latent_invariants(s, d).has_value());
  auto bad = s;
  bad.u_star[1] = 0.5;
  CHECK(check_latent_invariants(bad, d).has_value());
  bad = s;
  bad.z_star[0] = 0.5;
  CHECK(check_latent_invariants(bad, d).has_value());
  bad = s;
  bad.z[0] = 1;
  bad.z_star[0] = 0.5;
  CHECK(check_latent_invariants(bad, d).has_value());
}

TEST_CASE("chain protocol") {
  ChainConfig config;
  CHECK(config.stored_draws() == 12000);
  CHECK_THROWS_AS((ChainConfig{100, 100, 1}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((ChainConfig{100, 10, 0}.validate()), std::invalid_argument);

  const auto design = build_dichotomous(two_by_two());
  config.iterations = 620;
  config.burn_in = 20;
  config.thin = 5;
  CHECK(run_chain(design, config).draws.size() == 120);
}

TEST_CASE("short chain: finite draws and invariants every sweep") {
  const auto design = build_dichotomous(two_by_two());
  ChainConfig config;
  config.iterations = 10;
  config.burn_in = 0;
  config.thin = 1;
  long sweeps = 0;
  const auto samples = run_chain(design, config, [&](long, const LatentState& latent, const ParameterState& zeta) {
    ++sweeps;
    const auto problem = check_latent_invariants(latent, design);
    CHECK_MESSAGE(!problem.has_value(), problem.value_or(""));
    CHECK_NOTHROW(zeta.validate());
  });
  CHECK(sweeps == 10);
  REQUIRE(samples.draws.size() == 10);
  for (const auto& z : samples.draws) {
    CHECK(z.beta.allFinite());
    CHECK(z.beta_omega.allFinite());
    CHECK(std::isfinite(z.sigma2));
  }
}

TEST_CASE("identical seeds give identical chains") {
  const auto design = build_dichotomous(two_by_two());
  ChainConfig config;
  config.iterations = 300;
  config.burn_in = 50;
  config.seed = 99;
  const auto a = run_chain(design, config);
  const auto b = run_chain(design, config);
  REQUIRE(a.draws.size() == b.draws.size());
  for (std::size_t k = 0; k < a.draws.size(); ++k) {
    CHECK(a.draws[k].beta == b.draws[k].beta);
    CHECK(a.draws[k].mu == b.draws[k].mu);
    CHECK(a.draws[k].sigma_omega2 == b.draws[k].sigma_omega2);
  }
  CHECK(a.stats == b.stats);
  config.seed = 100;
  CHECK(run_chain(design, config).draws.back().beta != a.draws.back().beta);
}
