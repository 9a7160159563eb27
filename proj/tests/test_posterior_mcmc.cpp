#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "spikedwigner/enumeration.hpp"
#include "spikedwigner/instance.hpp"
#include "spikedwigner/mcmc.hpp"

using namespace spikedwigner;

TEST_CASE("exact posterior at lambda = 0 reduces to the prior") {
  const Prior p = two_point_centered_prior(0.3);
  const Instance inst = sample_instance(8, 0.0, p, true, 21, 0);
  const OverlapStats st = posterior_pair_correlations(inst, p);
  // <x_i> = m1 = 0 and <R_{1,2}> = (1/n) sum <x_i>^2 = 0
  CHECK(std::abs(st.mean_r12) <= 1e-20);
  // <R_{1,*}^2> = (1/n^2) sum_i x*_i^2 m2 at independence
  double expect = 0.0;
  for (double x : inst.spike) expect += x * x;
  expect = expect * moments(p).m2 / (8.0 * 8.0);
  CHECK(st.mean_r1s_sq == Catch::Approx(expect).margin(1e-12));
}

TEST_CASE("exact posterior consistency: second moments dominate first moments") {
  const Instance inst = sample_instance(10, 0.8, rademacher_prior(), true, 22, 1);
  const OverlapStats st = posterior_pair_correlations(inst, rademacher_prior());
  CHECK(st.mean_r1s_sq >= st.mean_r1s * st.mean_r1s - 1e-12);
  CHECK(st.mean_r12_sq >= st.mean_r12 * st.mean_r12 - 1e-12);
  CHECK(st.mean_abs_r1s >= std::abs(st.mean_r1s) - 1e-12);
  CHECK(st.mean_abs_r1s <= 1.0 + 1e-12);  // |R| <= support_bound^2
}

TEST_CASE("nishimori across instances: E<R12> ~ E<R1*> for exact posteriors") {
  const Prior p = rademacher_prior();
  double r12 = 0.0, r1s = 0.0;
  const int reps = 400;
  for (int s = 0; s < reps; ++s) {
    const Instance inst = sample_instance(12, 0.5, p, true, 23, s);
    const OverlapStats st = posterior_pair_correlations(inst, p);
    r12 += st.mean_r12;
    r1s += st.mean_r1s;
  }
  r12 /= reps;
  r1s /= reps;
  CHECK(r12 == Catch::Approx(r1s).margin(0.01));
}

TEST_CASE("mcmc matches the exact posterior on a small system") {
  const Prior p = rademacher_prior();
  const Instance inst = sample_instance(12, 0.5, p, true, 24, 7);
  const OverlapStats exact = posterior_pair_correlations(inst, p);
  McmcConfig cfg;
  cfg.chains = 4;
  cfg.burn_in = 300;
  cfg.sweeps = 4300;
  const OverlapStats mc = mcmc_posterior(inst, p, cfg);
  REQUIRE(mc.eb_r1s_sq > 0.0);
  CHECK(std::abs(mc.mean_r1s_sq - exact.mean_r1s_sq) <= 3.0 * mc.eb_r1s_sq + 0.003);
  CHECK(std::abs(mc.mean_r12 - exact.mean_r12) <= 3.0 * mc.eb_r12 + 0.003);
  CHECK(std::abs(mc.mean_abs_r1s - exact.mean_abs_r1s) <= 3.0 * mc.eb_abs_r1s + 0.003);
}

TEST_CASE("mcmc at lambda = 0 recovers the prior magnetization") {
  const Prior p = two_point_centered_prior(0.3);
  const Instance inst = sample_instance(30, 0.0, p, true, 25, 0);
  McmcConfig cfg;
  cfg.chains = 2;
  cfg.burn_in = 100;
  cfg.sweeps = 2100;
  const OverlapStats mc = mcmc_posterior(inst, p, cfg);
  // posterior = prior: <R_{1,2}> = m1^2 = 0 within error bars
  CHECK(std::abs(mc.mean_r12) <= 3.0 * mc.eb_r12 + 0.01);
}

TEST_CASE("mcmc determinism") {
  const Instance inst = sample_instance(10, 0.5, rademacher_prior(), true, 26, 0);
  McmcConfig cfg;
  cfg.chains = 2;
  cfg.burn_in = 50;
  cfg.sweeps = 550;
  const OverlapStats a = mcmc_posterior(inst, rademacher_prior(), cfg);
  const OverlapStats b = mcmc_posterior(inst, rademacher_prior(), cfg);
  CHECK(a.mean_r1s == b.mean_r1s);
  CHECK(a.mean_r12_sq == b.mean_r12_sq);
}

TEST_CASE("mcmc input validation") {
  const Instance planted = sample_instance(8, 0.5, rademacher_prior(), true, 27, 0);
  const Instance null_inst = sample_instance(8, 0.5, rademacher_prior(), false, 27, 0);
  McmcConfig cfg;
  cfg.chains = 1;
  CHECK_THROWS_AS(mcmc_posterior(planted, rademacher_prior(), cfg), std::invalid_argument);
  CHECK_THROWS_AS(mcmc_posterior(null_inst, rademacher_prior(), McmcConfig{}),
                  std::invalid_argument);
  McmcConfig interp;
  interp.t = 0.5;  // side_info_r required
  CHECK_THROWS_AS(mcmc_posterior(planted, rademacher_prior(), interp), std::invalid_argument);
  McmcConfig bad;
  bad.burn_in = 100;
  bad.sweeps = 50;
  CHECK_THROWS_AS(mcmc_posterior(planted, rademacher_prior(), bad), std::invalid_argument);
}

TEST_CASE("interpolated measure with side information pulls the overlap toward q*") {
  // above lambda_c with t < 1 the side channel breaks the spin-flip symmetry,
  // so <R_{1,*}> is positive and of the order of q*(lambda)
  const Prior p = rademacher_prior();
  const double lambda = 1.5, t = 0.5;
  const double qstar = 0.39418613377182548;  // bisection oracle value
  const double r_side = lambda * qstar;
  double mean = 0.0;
  const int reps = 60;
  for (int s = 0; s < reps; ++s) {
    // matrix channel of the interpolated measure carries SNR t*lambda
    const Instance inst = sample_instance(14, t * lambda, p, true, 28, s);
    McmcConfig cfg;
    cfg.chains = 2;
    cfg.burn_in = 200;
    cfg.sweeps = 1200;
    cfg.t = t;
    cfg.side_info_r = r_side;
    mean += mcmc_posterior(inst, p, cfg).mean_r1s;
  }
  mean /= reps;
  CHECK(mean > 0.25);  // decisively off the symmetric value 0
  CHECK(mean == Catch::Approx(qstar).margin(0.12));
}

TEST_CASE("symmetric prior above lambda_c: |R| concentrates near q*, sign is symmetric") {
  const Prior p = rademacher_prior();
  const double qstar = 0.39418613377182548;  // lambda = 1.5 oracle
  std::vector<double> rs;
  double mean_r = 0.0, mean_abs = 0.0;
  const int reps = 150;
  for (int s = 0; s < reps; ++s) {
    const Instance inst = sample_instance(14, 1.5, p, true, 29, s);
    const OverlapStats st = posterior_pair_correlations(inst, p);
    rs.push_back(st.mean_r1s);
    mean_r += st.mean_r1s;
    mean_abs += st.mean_abs_r1s;
  }
  mean_r /= reps;
  mean_abs /= reps;
  CHECK(std::abs(mean_r) < 0.05);                        // sign symmetry
  CHECK(mean_abs == Catch::Approx(qstar).margin(0.15));  // finite-size blurred
  // sample skew of <R_{1,*}> across instances consistent with 0
  double m2c = 0.0, m3c = 0.0;
  for (double r : rs) {
    m2c += (r - mean_r) * (r - mean_r);
    m3c += (r - mean_r) * (r - mean_r) * (r - mean_r);
  }
  m2c /= reps;
  m3c /= reps;
  const double skew = m3c / std::pow(m2c, 1.5);
  CHECK(std::abs(skew) <= 3.0 * std::sqrt(6.0 / reps));
}

TEST_CASE("absolute-overlap concentration sharpens with n above lambda_c") {
  // E<1{ ||R| - q*| >= 0.2 }> decays over n in {100, 200, 400}
  const Prior p = rademacher_prior();
  const double qstar = 0.39418613377182548;  // lambda = 1.5 oracle
  auto mass_at = [&](int n) {
    double mass = 0.0;
    const int reps = 20;
    for (int s = 0; s < reps; ++s) {
      const Instance inst = sample_instance(n, 1.5, p, true, 30, s);
      McmcConfig cfg;
      cfg.chains = 2;
      cfg.burn_in = 150;
      cfg.sweeps = 750;
      cfg.track_qref = qstar;
      cfg.track_eps = 0.2;
      mass += mcmc_posterior(inst, p, cfg).mass_abs_dev;
    }
    return mass / 20;
  };
  const double m100 = mass_at(100), m200 = mass_at(200), m400 = mass_at(400);
  INFO("mass 100/200/400: " << m100 << " " << m200 << " " << m400);
  CHECK(m100 > m400);
  CHECK(m200 <= m100 + 0.02);
  CHECK(m400 <= m200 + 0.02);
  CHECK(m400 <= 0.5 * m100);
}
