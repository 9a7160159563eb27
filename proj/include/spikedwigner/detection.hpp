#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "spikedwigner/correction.hpp"
#include "spikedwigner/rng.hpp"

namespace spikedwigner {

enum class Model { planted, null_model };

/// A batch of exact log-likelihood-ratio values from matched instances.
struct LlrSample {
  std::vector<double> values;
  Model model = Model::planted;
  int n = 0;
  double lambda = 0.0;
  std::string prior_tag;
  uint64_t master_seed = 0;
};

struct MomentRow {
  int k;
  double empirical;     // k-th centered empirical moment of log L - mu
  double target;        // m(k) (2 mu)^{k/2}, m(k) the standard Gaussian moments
  double gap;           // |empirical - target|
  double bootstrap_se;  // bootstrap standard error of the empirical moment
};

struct GaussianFit {
  double mean_hat = 0.0;
  double var_hat = 0.0;
  double ks_distance = 1.0;
  double target_mean = 0.0;  // +mu planted, -mu null
  double target_var = 0.0;
};

struct DetectionReport {
  int n = 0;
  double lambda = 0.0;
  std::string prior_tag;
  uint64_t seed = 0;
  size_t samples_planted = 0, samples_null = 0;
  double kl_hat = 0.0, kl_stderr = 0.0;
  double mean_hat = 0.0, var_hat = 0.0, ks_distance = 0.0;
  double null_mean_hat = 0.0, null_var_hat = 0.0, null_ks_distance = 0.0;
  CltParams predicted{0.0, 0.0};
  double type1_hat = 0.0, type2_hat = 0.0, err_hat = 0.0, tv_hat = 0.0;
  double type1_stderr = 0.0, type2_stderr = 0.0, err_stderr = 0.0;
  std::vector<MomentRow> moment_table;
  bool conjecture_flag = false;  // null-model formulas are conjectural off-Rademacher
};

/// Sample mean of log L under the planted model: estimates D_KL(P_lambda,P_0).
inline std::pair<double, double> estimate_kl(const LlrSample& samples) {
  if (samples.model != Model::planted)
    throw std::invalid_argument("estimate_kl: planted samples required");
  const size_t n = samples.values.size();
  if (n < 2) throw std::invalid_argument("estimate_kl: need at least 2 samples");
  double mean = 0.0;
  for (double v : samples.values) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : samples.values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

namespace detail {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// One-sample Kolmogorov-Smirnov distance against N(mean, var).
inline double ks_distance(std::vector<double> values, double mean, double var) {
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  const double sd = std::sqrt(var);
  double d = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    const double f = sd > 0.0 ? normal_cdf((values[i] - mean) / sd)
                              : (values[i] >= mean ? 1.0 : 0.0);
    d = std::max(d, std::max((i + 1) / n - f, f - i / n));
  }
  return d;
}

}  // namespace detail

/// Asymptotic critical value of the one-sample KS distance at level alpha:
/// K_alpha / sqrt(n) with Q_KS(K_alpha) = alpha.
inline double ks_critical(size_t n_samples, double alpha) {
  if (n_samples == 0) throw std::invalid_argument("ks_critical: empty sample");
  auto q_ks = [](double x) {
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) s += (k % 2 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * x * x);
    return 2.0 * s;
  };
  double lo = 0.2, hi = 3.0;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (q_ks(mid) > alpha)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi) / std::sqrt(static_cast<double>(n_samples));
}

/// Fits the empirical law against the limiting Gaussian: N(+mu, 2mu) under
/// the planted model, N(-mu, 2mu) under the null. Refuses planted
/// comparisons at or above lambda_c (the CLT is a below-threshold statement).
inline GaussianFit gaussian_fit(const LlrSample& samples, const CltParams& predicted,
                                double lambda_c_value) {
  if (samples.model == Model::planted && samples.lambda >= lambda_c_value)
    throw std::invalid_argument("gaussian_fit: planted comparison requires lambda < lambda_c");
  GaussianFit fit;
  const double sgn = samples.model == Model::planted ? 1.0 : -1.0;
  fit.target_mean = sgn * predicted.mu;
  fit.target_var = predicted.sigma2;
  const size_t n = samples.values.size();
  if (n < 2) throw std::invalid_argument("gaussian_fit: need at least 2 samples");
  for (double v : samples.values) fit.mean_hat += v;
  fit.mean_hat /= static_cast<double>(n);
  for (double v : samples.values) fit.var_hat += (v - fit.mean_hat) * (v - fit.mean_hat);
  fit.var_hat /= static_cast<double>(n - 1);
  fit.ks_distance = detail::ks_distance(samples.values, fit.target_mean, fit.target_var);
  return fit;
}

/// Empirical Type-I/II/total errors of the likelihood-ratio test with the
/// tie convention "log L = 0 is classified as null" (the test rejects only
/// when L > 1). err + tv = 1 by construction.
inline void error_rates(const LlrSample& planted, const LlrSample& null_samples,
                        DetectionReport& report) {
  if (planted.model != Model::planted || null_samples.model != Model::null_model)
    throw std::invalid_argument("error_rates: need one planted and one null batch");
  if (planted.n != null_samples.n || planted.lambda != null_samples.lambda ||
      planted.prior_tag != null_samples.prior_tag)
    throw std::invalid_argument("error_rates: mismatched (n, lambda, prior)");
  auto rate = [](const std::vector<double>& v, auto&& pred) {
    size_t c = 0;
    for (double x : v)
      if (pred(x)) ++c;
    return static_cast<double>(c) / static_cast<double>(v.size());
  };
  report.type2_hat = rate(planted.values, [](double x) { return x <= 0.0; });
  report.type1_hat = rate(null_samples.values, [](double x) { return x > 0.0; });
  report.err_hat = report.type1_hat + report.type2_hat;
  report.tv_hat = 1.0 - report.err_hat;
  auto binom_se = [](double p, size_t n) {
    return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n));
  };
  report.type2_stderr = binom_se(report.type2_hat, planted.values.size());
  report.type1_stderr = binom_se(report.type1_hat, null_samples.values.size());
  report.err_stderr = std::sqrt(report.type1_stderr * report.type1_stderr +
                                report.type2_stderr * report.type2_stderr);
}

/// Centered empirical moments of X = log L - mu against the Gaussian targets
/// m(k) (2 mu)^{k/2}, with m(k) = (k-1) m(k-2), m(0) = 1, m(1) = 0.
/// Bootstrap error bars (resampling with replacement, deterministic seed).
inline std::vector<MomentRow> moment_comparison(const LlrSample& samples, int k_max, double mu,
                                                int bootstrap_reps = 200) {
  if (samples.model != Model::planted)
    throw std::invalid_argument("moment_comparison: planted samples required");
  if (k_max < 1 || k_max > 6) throw std::invalid_argument("moment_comparison: k_max in [1,6]");
  const size_t n = samples.values.size();
  if (n < 2) throw std::invalid_argument("moment_comparison: need at least 2 samples");
  std::vector<double> gauss_m(k_max + 1, 0.0);
  gauss_m[0] = 1.0;
  for (int k = 2; k <= k_max; ++k) gauss_m[k] = (k - 1) * gauss_m[k - 2];
  const double b = 2.0 * mu;

  auto centered_moment = [&](const std::vector<double>& v, int k) {
    double s = 0.0;
    for (double x : v) s += std::pow(x - mu, k);
    return s / static_cast<double>(v.size());
  };

  rng::Substream boot(samples.master_seed, rng::Stream::bootstrap, 0);
  std::vector<std::vector<double>> boot_moments(k_max + 1);
  std::vector<double> resample(n);
  for (int rep = 0; rep < bootstrap_reps; ++rep) {
    for (size_t i = 0; i < n; ++i) {
      const uint64_t r = boot.bits(2 * (static_cast<uint64_t>(rep) * n + i));
      resample[i] = samples.values[r % n];
    }
    for (int k = 1; k <= k_max; ++k) boot_moments[k].push_back(centered_moment(resample, k));
  }

  std::vector<MomentRow> table;
  for (int k = 1; k <= k_max; ++k) {
    MomentRow row;
    row.k = k;
    row.empirical = centered_moment(samples.values, k);
    row.target = gauss_m[k] * std::pow(b, k / 2.0);
    row.gap = std::abs(row.empirical - row.target);
    double bm = 0.0;
    for (double v : boot_moments[k]) bm += v;
    bm /= boot_moments[k].size();
    double var = 0.0;
    for (double v : boot_moments[k]) var += (v - bm) * (v - bm);
    var /= (boot_moments[k].size() - 1);
    row.bootstrap_se = std::sqrt(var);
    table.push_back(row);
  }
  return table;
}

}  // namespace spikedwigner
