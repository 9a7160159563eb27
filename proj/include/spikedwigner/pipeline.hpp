#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "spikedwigner/detection.hpp"
#include "spikedwigner/enumeration.hpp"
#include "spikedwigner/instance.hpp"
#include "spikedwigner/parallel.hpp"
#include "spikedwigner/prior.hpp"
#include "spikedwigner/rs_solver.hpp"

namespace spikedwigner {

struct SimulateConfig {
  int n = 16;
  double lambda = 0.5;
  Prior prior = rademacher_prior();
  size_t samples = 1000;
  uint64_t seed = 1;
  unsigned threads = 0;  // 0 = hardware concurrency
  uint64_t max_configs = 1ull << 26;
};

/// Exact log L for `samples` independent instances of one model, evaluated
/// in parallel over deterministic per-sample substreams (results do not
/// depend on the thread count).
inline LlrSample generate_llr_samples(Model model, const SimulateConfig& cfg) {
  LlrSample out;
  out.model = model;
  out.n = cfg.n;
  out.lambda = cfg.lambda;
  out.prior_tag = cfg.prior.tag;
  out.master_seed = cfg.seed;
  out.values.resize(cfg.samples);
  EnumOptions opts;
  opts.max_configs = cfg.max_configs;
  // null samples use a shifted substream so planted/null noise is independent
  const uint64_t index_base = model == Model::planted ? 0 : (1ull << 32);
  parallel_for(
      cfg.samples,
      [&](size_t i) {
        const Instance inst = sample_instance(cfg.n, cfg.lambda, cfg.prior,
                                              model == Model::planted, cfg.seed, index_base + i);
        out.values[i] = exact_llr(inst, cfg.prior, opts).log_l;
      },
      cfg.threads);
  return out;
}

/// Hard self-checks behind `simulate`: re-evaluating a sample must be
/// bit-identical, and the Gray-code path must agree with the naive
/// enumeration on a probe instance.
inline void simulate_self_check(const SimulateConfig& cfg, const LlrSample& planted) {
  if (planted.values.empty()) return;
  const Instance probe =
      sample_instance(cfg.n, cfg.lambda, cfg.prior, true, cfg.seed, 0);
  EnumOptions opts;
  opts.max_configs = cfg.max_configs;
  const double again = exact_llr(probe, cfg.prior, opts).log_l;
  if (again != planted.values[0])
    throw std::runtime_error("simulate self-check failed: non-deterministic log L");
  const int n_small = std::min(cfg.n, 10);
  const Instance small = sample_instance(n_small, cfg.lambda, cfg.prior, true, cfg.seed, 0);
  EnumOptions gray;
  gray.method = EnumOptions::Method::gray;
  EnumOptions naive;
  naive.method = EnumOptions::Method::naive;
  const double g = exact_llr(small, cfg.prior, gray).log_l;
  const double v = exact_llr(small, cfg.prior, naive).log_l;
  if (std::abs(g - v) >= 1e-10)
    throw std::runtime_error("simulate self-check failed: gray vs naive mismatch");
}

/// Assembles the full detection report from matched planted/null batches.
inline DetectionReport build_detection_report(const LlrSample& planted,
                                              const LlrSample& null_samples,
                                              double lambda_c_value, int k_max = 4) {
  DetectionReport rep;
  rep.n = planted.n;
  rep.lambda = planted.lambda;
  rep.prior_tag = planted.prior_tag;
  rep.seed = planted.master_seed;
  rep.samples_planted = planted.values.size();
  rep.samples_null = null_samples.values.size();
  rep.conjecture_flag = planted.prior_tag != "rademacher";

  auto [kl, kl_se] = estimate_kl(planted);
  rep.kl_hat = kl;
  rep.kl_stderr = kl_se;
  rep.predicted = planted.lambda < 1.0 ? clt_params(planted.lambda) : CltParams{0.0, 0.0};

  if (planted.lambda < lambda_c_value) {
    const GaussianFit fit = gaussian_fit(planted, rep.predicted, lambda_c_value);
    rep.mean_hat = fit.mean_hat;
    rep.var_hat = fit.var_hat;
    rep.ks_distance = fit.ks_distance;
    rep.moment_table = moment_comparison(planted, k_max, rep.predicted.mu);
  } else {
    const auto [m, se] = estimate_kl(planted);
    rep.mean_hat = m;
    (void)se;
  }
  {
    const GaussianFit fit = gaussian_fit(null_samples, rep.predicted, lambda_c_value);
    rep.null_mean_hat = fit.mean_hat;
    rep.null_var_hat = fit.var_hat;
    rep.null_ks_distance = fit.ks_distance;
  }
  error_rates(planted, null_samples, rep);
  return rep;
}

}  // namespace spikedwigner
