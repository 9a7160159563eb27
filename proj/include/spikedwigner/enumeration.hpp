#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "spikedwigner/instance.hpp"
#include "spikedwigner/prior.hpp"

namespace spikedwigner {

struct LlrResult {
  double log_l = 0.0;
  enum class Method { enumeration, gray_code, quadrature_oracle } method = Method::gray_code;
  bool sk_reduction = false;  // Rademacher log Z_N(beta) fast path was used
  int n = 0;
  double lambda = 0.0;
  uint64_t config_count = 0;
};

struct EnumOptions {
  enum class Method { auto_select, gray, naive } method = Method::auto_select;
  uint64_t max_configs = 1ull << 26;
};

/// Posterior overlap statistics; exact (enumeration) or sampled (MCMC).
struct OverlapStats {
  double mean_r1s = 0.0;      // <R_{1,*}>
  double mean_r1s_sq = 0.0;   // <R_{1,*}^2>
  double mean_abs_r1s = 0.0;  // <|R_{1,*}|>
  double mean_r12 = 0.0;      // <R_{1,2}>
  double mean_r12_sq = 0.0;   // <R_{1,2}^2>
  double mass_abs_dev = 0.0;  // <1{ ||R_{1,*}| - q_ref| >= eps }> when tracked (MCMC)
  double eb_r1s = 0.0, eb_r1s_sq = 0.0, eb_abs_r1s = 0.0, eb_r12 = 0.0, eb_r12_sq = 0.0;
  double eb_mass_abs_dev = 0.0;
  enum class Estimator { exact_pair_correlations, mcmc } estimator =
      Estimator::exact_pair_correlations;
};

namespace detail {

struct Kahan {
  double sum = 0.0, comp = 0.0;
  void add(double x) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

/// Running log-sum-exp: max-shifted with online rescaling, no second pass.
struct LogSumExp {
  double shift = -1e300, total = 0.0;
  void add(double v) {
    if (v <= shift) {
      total += std::exp(v - shift);
    } else {
      total = total * std::exp(shift - v) + 1.0;
      shift = v;
    }
  }
  double value() const { return shift + std::log(total); }
};

inline uint64_t checked_config_count(size_t n_atoms, int n, uint64_t cap) {
  uint64_t count = 1;
  for (int i = 0; i < n; ++i) {
    if (count > cap / n_atoms) return cap + 1;  // saturate instead of overflowing
    count *= n_atoms;
  }
  return count;
}

inline std::vector<double> dense_y(const Instance& inst) {
  const int n = inst.n;
  std::vector<double> Y(static_cast<size_t>(n) * n, 0.0);
  size_t e = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j, ++e) {
      Y[static_cast<size_t>(i) * n + j] = inst.y_upper[e];
      Y[static_cast<size_t>(j) * n + i] = inst.y_upper[e];
    }
  return Y;
}

/// Reflected mixed-radix Gray walk over all s^n configurations; calls
/// on_config() for the initial state, then on_step(site, digit) after each
/// single-site change followed by on_config(). Loopless focus-pointer scheme.
template <class OnStep, class OnConfig>
inline void gray_walk(int n, int radix, OnStep&& on_step, OnConfig&& on_config) {
  if (radix < 2) {  // a point-mass prior has a single configuration
    on_config();
    return;
  }
  std::vector<int> digit(n, 0), focus(n + 1), dir(n, 1);
  for (int i = 0; i <= n; ++i) focus[i] = i;
  on_config();
  for (;;) {
    const int j = focus[0];
    focus[0] = 0;
    if (j == n) break;
    digit[j] += dir[j];
    if (digit[j] == 0 || digit[j] == radix - 1) {
      dir[j] = -dir[j];
      focus[j] = focus[j + 1];
      focus[j + 1] = j + 1;
    }
    on_step(j, digit[j]);
    on_config();
  }
}

/// Gray-code evaluation of log L for a general discrete prior. Maintains the
/// per-site fields h_k = sum_j Y_kj x_j, the interaction sum S1, and the power
/// sums P = sum x^2, Q = sum x^4 so a step costs O(n); all running sums are
/// compensated to bound drift over 2^26 steps.
inline double llr_gray_generic(const Instance& inst, const Prior& prior) {
  const int n = inst.n;
  const size_t na = prior.atoms.size();
  const std::vector<double> Y = dense_y(inst);
  const double coupling = std::sqrt(inst.lambda / n);
  const double c2 = inst.lambda / (2.0 * n);

  std::vector<double> value(na), logw(na), v2(na), v4(na);
  for (size_t a = 0; a < na; ++a) {
    value[a] = prior.atoms[a].value;
    logw[a] = std::log(prior.atoms[a].weight);
    v2[a] = value[a] * value[a];
    v4[a] = v2[a] * v2[a];
  }

  std::vector<double> x(n, value[0]);
  std::vector<Kahan> h(n);
  Kahan s1, p, q, lw;
  for (int i = 0; i < n; ++i) {
    p.add(v2[0]);
    q.add(v4[0]);
    lw.add(logw[0]);
  }
  for (int i = 0; i < n; ++i) {
    Kahan hi;
    for (int j = 0; j < n; ++j)
      if (j != i) hi.add(Y[static_cast<size_t>(i) * n + j] * x[j]);
    h[i] = hi;
  }
  double s1v = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) s1v += Y[static_cast<size_t>(i) * n + j] * x[i] * x[j];
  s1.add(s1v);

  std::vector<int> digit(n, 0);
  LogSumExp lse;
  auto exponent = [&]() {
    const double pv = p.sum;
    return coupling * s1.sum - c2 * 0.5 * (pv * pv - q.sum) + lw.sum;
  };
  detail::gray_walk(
      n, static_cast<int>(na),
      [&](int k, int dnew) {
        const int dold = digit[k];
        digit[k] = dnew;
        const double delta = value[dnew] - value[dold];
        s1.add(h[k].sum * delta);
        p.add(v2[dnew] - v2[dold]);
        q.add(v4[dnew] - v4[dold]);
        lw.add(logw[dnew] - logw[dold]);
        x[k] = value[dnew];
        const double* yk = &Y[static_cast<size_t>(k) * n];
        for (int j = 0; j < n; ++j)
          if (j != k) h[j].add(yk[j] * delta);
      },
      [&]() { lse.add(exponent()); });
  return lse.value();
}

/// Rademacher fast path via the SK partition function:
/// log L = log Z_N(beta) - N log 2 - beta^2 (N-1)/4 with beta = sqrt(lambda),
/// Z_N enumerated over half the cube (global spin-flip symmetry) with a
/// two-block reflected Gray scheme: the interaction sum splits as
/// S1 = S_A(sigma_A) + S_B(sigma_B) + sigma_A C sigma_B, the block sums are
/// tabulated along their own Gray walks, and the cross field
/// f_j = sum_{i in A} C_ij sigma_i is maintained per outer flip, leaving an
/// O(1) inner step. The cross term restarts exactly at each outer step, so
/// rounding drift cannot accumulate across the 2^26-step budget.
inline double llr_sk_rademacher(const Instance& inst) {
  const int n = inst.n;
  const std::vector<double> Y = dense_y(inst);
  const double coupling = std::sqrt(inst.lambda / n);
  const int nb = n / 2;       // inner block
  const int na = n - nb;      // outer block, first site pinned at +1
  const uint64_t outer_count = 1ull << (na - 1);
  const uint64_t inner_count = 1ull << nb;

  // S_B along the binary reflected Gray walk of block B (sites na..n-1)
  std::vector<double> sb_gray(inner_count);
  std::vector<int> b_flip(inner_count, 0);  // flipped bit of inner step t >= 1
  {
    std::vector<double> xb(nb, 1.0);
    std::vector<Kahan> hb(nb);
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j)
        if (j != i) hb[i].add(Y[static_cast<size_t>(na + i) * n + (na + j)]);
    Kahan sb;
    {
      double v = 0.0;
      for (int i = 0; i < nb; ++i)
        for (int j = i + 1; j < nb; ++j) v += Y[static_cast<size_t>(na + i) * n + (na + j)];
      sb.add(v);
    }
    sb_gray[0] = sb.sum;
    for (uint64_t t = 1; t < inner_count; ++t) {
      const int k = std::countr_zero(t);
      b_flip[t] = k;
      const double delta = -2.0 * xb[k];
      xb[k] = -xb[k];
      sb.add(hb[k].sum * delta);
      for (int j = 0; j < nb; ++j)
        if (j != k) hb[j].add(Y[static_cast<size_t>(na + k) * n + (na + j)] * delta);
      sb_gray[t] = sb.sum;
    }
  }

  std::vector<double> xa(na, 1.0);
  std::vector<Kahan> ha(na);
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < na; ++j)
      if (j != i) ha[i].add(Y[static_cast<size_t>(i) * n + j]);
  Kahan sa;
  {
    double v = 0.0;
    for (int i = 0; i < na; ++i)
      for (int j = i + 1; j < na; ++j) v += Y[static_cast<size_t>(i) * n + j];
    sa.add(v);
  }
  std::vector<Kahan> f(nb);  // cross field per inner site
  for (int j = 0; j < nb; ++j)
    for (int i = 0; i < na; ++i) f[j].add(Y[static_cast<size_t>(i) * n + (na + j)]);

  LogSumExp lse;
  std::vector<double> xb_sign(nb);
  for (uint64_t ta = 0; ta < outer_count; ++ta) {
    if (ta > 0) {
      const int k = std::countr_zero(ta) + 1;  // site 0 pinned
      const double delta = -2.0 * xa[k];
      xa[k] = -xa[k];
      sa.add(ha[k].sum * delta);
      for (int j = 0; j < na; ++j)
        if (j != k) ha[j].add(Y[static_cast<size_t>(k) * n + j] * delta);
      for (int j = 0; j < nb; ++j) f[j].add(Y[static_cast<size_t>(k) * n + (na + j)] * delta);
    }
    double cross = 0.0;
    for (int j = 0; j < nb; ++j) {
      xb_sign[j] = 1.0;
      cross += f[j].sum;
    }
    const double base = sa.sum;
    lse.add(coupling * (base + sb_gray[0] + cross));
    for (uint64_t t = 1; t < inner_count; ++t) {
      const int k = b_flip[t];
      cross -= 2.0 * xb_sign[k] * f[k].sum;
      xb_sign[k] = -xb_sign[k];
      lse.add(coupling * (base + sb_gray[t] + cross));
    }
  }
  const double log_z = lse.value() + std::log(2.0);  // Z_N = 2 * (half-cube sum)
  return log_z - n * std::log(2.0) - inst.lambda * (n - 1) / 4.0;
}

/// Per-configuration re-evaluation, O(s^n n^2): the slow reference method.
inline double llr_naive(const Instance& inst, const Prior& prior) {
  const int n = inst.n;
  const size_t na = prior.atoms.size();
  const std::vector<double> Y = dense_y(inst);
  const double coupling = std::sqrt(inst.lambda / n);
  const double c2 = inst.lambda / (2.0 * n);
  std::vector<int> digit(n, 0);
  LogSumExp lse;
  for (;;) {
    double s1 = 0.0, s2 = 0.0, lw = 0.0;
    for (int i = 0; i < n; ++i) {
      const double xi = prior.atoms[digit[i]].value;
      lw += std::log(prior.atoms[digit[i]].weight);
      for (int j = i + 1; j < n; ++j) {
        const double xj = prior.atoms[digit[j]].value;
        s1 += Y[static_cast<size_t>(i) * n + j] * xi * xj;
        s2 += xi * xi * xj * xj;
      }
    }
    lse.add(coupling * s1 - c2 * s2 + lw);
    int k = 0;
    while (k < n && digit[k] == static_cast<int>(na) - 1) digit[k++] = 0;
    if (k == n) break;
    ++digit[k];
  }
  return lse.value();
}

inline bool is_rademacher_like(const Prior& prior) {
  return prior.atoms.size() == 2 && std::abs(prior.atoms[0].value + 1.0) < 1e-15 &&
         std::abs(prior.atoms[1].value - 1.0) < 1e-15 &&
         std::abs(prior.atoms[0].weight - 0.5) < 1e-15;
}

}  // namespace detail

/// Exact log-likelihood ratio log L(Y; lambda) by configuration enumeration.
/// Default path: SK reduction for the Rademacher prior, mixed-radix Gray code
/// otherwise; "naive" re-evaluates every configuration from scratch and
/// exists as the independent reference. Refuses when s^n exceeds the cap.
inline LlrResult exact_llr(const Instance& inst, const Prior& prior, const EnumOptions& opts = {}) {
  const uint64_t count = detail::checked_config_count(prior.atoms.size(), inst.n, opts.max_configs);
  if (count > opts.max_configs)
    throw std::invalid_argument(
        "exact_llr: config count exceeds cap (" + std::to_string(opts.max_configs) +
        "); use the MCMC sampler for larger systems");
  LlrResult res;
  res.n = inst.n;
  res.lambda = inst.lambda;
  res.config_count = count;
  if (inst.lambda == 0.0) {  // identical measures, log L = 0 for any Y
    res.log_l = 0.0;
    res.method = LlrResult::Method::gray_code;
    return res;
  }
  switch (opts.method) {
    case EnumOptions::Method::naive:
      res.log_l = detail::llr_naive(inst, prior);
      res.method = LlrResult::Method::enumeration;
      break;
    case EnumOptions::Method::gray:
      res.log_l = detail::llr_gray_generic(inst, prior);
      res.method = LlrResult::Method::gray_code;
      break;
    case EnumOptions::Method::auto_select:
      if (detail::is_rademacher_like(prior)) {
        res.log_l = detail::llr_sk_rademacher(inst);
        res.method = LlrResult::Method::gray_code;
        res.sk_reduction = true;
      } else {
        res.log_l = detail::llr_gray_generic(inst, prior);
        res.method = LlrResult::Method::gray_code;
      }
      break;
  }
  return res;
}

struct PairOptions {
  uint64_t max_configs = 1ull << 20;
};

/// Exact posterior single-site means and pair correlations by enumeration,
/// assembled into overlap statistics:
///   <R_{1,*}>  = (1/n) sum_i <x_i> x*_i
///   <R_{1,*}^2> = (1/n^2) sum_ij x*_i x*_j <x_i x_j>
///   <R_{1,2}>  = (1/n) sum_i <x_i>^2,  <R_{1,2}^2> = (1/n^2) sum_ij <x_i x_j>^2.
inline OverlapStats posterior_pair_correlations(const Instance& inst, const Prior& prior,
                                                const PairOptions& opts = {}) {
  if (!inst.planted())
    throw std::invalid_argument("posterior_pair_correlations: planted instance required");
  const uint64_t count = detail::checked_config_count(prior.atoms.size(), inst.n, opts.max_configs);
  if (count > opts.max_configs)
    throw std::invalid_argument("posterior_pair_correlations: config count exceeds cap");
  const int n = inst.n;
  const size_t na = prior.atoms.size();
  const std::vector<double> Y = detail::dense_y(inst);
  const double coupling = std::sqrt(inst.lambda / n);
  const double c2 = inst.lambda / (2.0 * n);

  std::vector<double> value(na), logw(na);
  for (size_t a = 0; a < na; ++a) {
    value[a] = prior.atoms[a].value;
    logw[a] = std::log(prior.atoms[a].weight);
  }

  // pass 1: the max-shift
  double shift = -1e300;
  // pass 2: weighted accumulation
  std::vector<double> x(n), sx(n, 0.0), spair(static_cast<size_t>(n) * n, 0.0);
  double wsum = 0.0, sabs = 0.0;

  for (int pass = 0; pass < 2; ++pass) {
    std::vector<int> digit(n, 0);
    std::fill(x.begin(), x.end(), value[0]);
    std::vector<detail::Kahan> h(n);
    detail::Kahan s1, p, q, lw, r1s;
    for (int i = 0; i < n; ++i) {
      p.add(value[0] * value[0]);
      q.add(value[0] * value[0] * value[0] * value[0]);
      lw.add(logw[0]);
      r1s.add(value[0] * inst.spike[i]);
    }
    for (int i = 0; i < n; ++i) {
      detail::Kahan hi;
      for (int j = 0; j < n; ++j)
        if (j != i) hi.add(Y[static_cast<size_t>(i) * n + j] * x[j]);
      h[i] = hi;
    }
    {
      double v = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) v += Y[static_cast<size_t>(i) * n + j] * x[i] * x[j];
      s1.add(v);
    }
    auto exponent = [&]() {
      return coupling * s1.sum - c2 * 0.5 * (p.sum * p.sum - q.sum) + lw.sum;
    };
    auto on_config = [&]() {
      const double v = exponent();
      if (pass == 0) {
        shift = std::max(shift, v);
        return;
      }
      const double w = std::exp(v - shift);
      wsum += w;
      sabs += w * std::abs(r1s.sum) / n;
      for (int i = 0; i < n; ++i) {
        sx[i] += w * x[i];
        const double wxi = w * x[i];
        double* row = &spair[static_cast<size_t>(i) * n];
        for (int j = i; j < n; ++j) row[j] += wxi * x[j];
      }
    };
    detail::gray_walk(
        n, static_cast<int>(na),
        [&](int k, int dnew) {
          const int dold = digit[k];
          digit[k] = dnew;
          const double delta = value[dnew] - value[dold];
          s1.add(h[k].sum * delta);
          p.add(value[dnew] * value[dnew] - value[dold] * value[dold]);
          q.add(value[dnew] * value[dnew] * value[dnew] * value[dnew] -
                value[dold] * value[dold] * value[dold] * value[dold]);
          lw.add(logw[dnew] - logw[dold]);
          r1s.add(delta * inst.spike[k]);
          x[k] = value[dnew];
          const double* yk = &Y[static_cast<size_t>(k) * n];
          for (int j = 0; j < n; ++j)
            if (j != k) h[j].add(yk[j] * delta);
        },
        on_config);
  }

  OverlapStats out;
  out.estimator = OverlapStats::Estimator::exact_pair_correlations;
  auto pair_mean = [&](int i, int j) {
    return (i <= j ? spair[static_cast<size_t>(i) * n + j] : spair[static_cast<size_t>(j) * n + i]) /
           wsum;
  };
  double r1s = 0.0, r12 = 0.0, r1s_sq = 0.0, r12_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double mi = sx[i] / wsum;
    r1s += mi * inst.spike[i];
    r12 += mi * mi;
    for (int j = 0; j < n; ++j) {
      const double pij = pair_mean(i, j);
      r1s_sq += inst.spike[i] * inst.spike[j] * pij;
      r12_sq += pij * pij;
    }
  }
  out.mean_r1s = r1s / n;
  out.mean_r12 = r12 / n;
  out.mean_r1s_sq = r1s_sq / (static_cast<double>(n) * n);
  out.mean_r12_sq = r12_sq / (static_cast<double>(n) * n);
  out.mean_abs_r1s = sabs / wsum;
  return out;
}

}  // namespace spikedwigner
