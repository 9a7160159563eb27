#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "spikedwigner/enumeration.hpp"
#include "spikedwigner/instance.hpp"
#include "spikedwigner/prior.hpp"
#include "spikedwigner/rng.hpp"
#include "spikedwigner/rs_solver.hpp"

namespace spikedwigner {

/// Configuration of the heat-bath posterior sampler. Counts of 0 resolve to
/// the documented heuristics burn_in = 10 n, sweeps = 100 n, thinning = n
/// single-site updates (one sweep). t < 1 turns on the side-information
/// channel of the interpolating Hamiltonian: observations
/// y_i = sqrt((1-t) r) x*_i + z_i with r = side_info_r. The instance itself
/// carries the matrix-channel SNR (sample it at t*lambda for the
/// interpolated Gibbs measure at global SNR lambda).
struct McmcConfig {
  int sweeps = 0;
  int burn_in = 0;
  int thinning = 0;
  int chains = 4;
  double t = 1.0;
  std::optional<double> side_info_r;  // defaults to lambda * q* via the quad overload
  // concentration tracking: when set, mass_abs_dev estimates
  // <1{ ||R_{1,*}| - track_qref | >= track_eps }>
  std::optional<double> track_qref;
  double track_eps = 0.2;
};

namespace detail {

struct BatchedMean {
  std::vector<double> values;
  void add(double v) { values.push_back(v); }
  double mean() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
  }
  /// Standard error from >= 20 batch means.
  double error_bar() const {
    const size_t b = 20;
    if (values.size() < 2 * b) return 0.0;
    const size_t per = values.size() / b;
    std::vector<double> bm;
    for (size_t i = 0; i + per <= values.size() && bm.size() < b; i += per) {
      double s = 0.0;
      for (size_t j = i; j < i + per; ++j) s += values[j];
      bm.push_back(s / per);
    }
    const double m = [&] {
      double s = 0.0;
      for (double v : bm) s += v;
      return s / bm.size();
    }();
    double var = 0.0;
    for (double v : bm) var += (v - m) * (v - m);
    var /= (bm.size() - 1);
    return std::sqrt(var / bm.size());
  }
};

}  // namespace detail

/// Heat-bath sampler of the (augmented) posterior. The conditional of x_i
/// given the rest is the prior reweighted by exp(x_i H_i - x_i^2 G_i) with
/// H_i = sqrt(lambda/n) sum_j Y_ij x_j + sqrt(r_s) y_i and
/// G_i = (lambda/2n) sum_{j != i} x_j^2 + r_s/2; running fields give O(1)
/// conditional evaluation after the O(n) update of a changed site.
/// Independent chains supply R_{1,2}; error bars are batched (20 batches).
inline OverlapStats mcmc_posterior(const Instance& inst, const Prior& prior, McmcConfig cfg) {
  if (!inst.planted()) throw std::invalid_argument("mcmc_posterior: planted instance required");
  if (cfg.t < 0.0 || cfg.t > 1.0) throw std::invalid_argument("mcmc_posterior: t in [0,1]");
  if (cfg.chains < 2)
    throw std::invalid_argument("mcmc_posterior: chains >= 2 required for R_{1,2}");
  const int n = inst.n;
  if (cfg.sweeps <= 0) cfg.sweeps = 100 * n;
  if (cfg.burn_in <= 0) cfg.burn_in = 10 * n;
  if (cfg.thinning <= 0) cfg.thinning = n;
  if (cfg.burn_in >= cfg.sweeps)
    throw std::invalid_argument("mcmc_posterior: burn_in < sweeps required");
  double r_side = 0.0;
  if (cfg.t < 1.0) {
    if (!cfg.side_info_r)
      throw std::invalid_argument("mcmc_posterior: side_info_r required when t < 1");
    if (*cfg.side_info_r < 0.0) throw std::invalid_argument("mcmc_posterior: side_info_r >= 0");
    r_side = (1.0 - cfg.t) * (*cfg.side_info_r);
  }

  const size_t na = prior.atoms.size();
  const std::vector<double> Y = detail::dense_y(inst);
  const double coupling = std::sqrt(inst.lambda / n);
  const double c2 = inst.lambda / (2.0 * n);
  const double sqrt_rs = std::sqrt(r_side);

  // side observations y_i = sqrt(r_s) x*_i + z_i, from their own substream
  std::vector<double> yside(n, 0.0);
  if (r_side > 0.0) {
    rng::Substream side(inst.master_seed, rng::Stream::side_info, inst.sample_index);
    for (int i = 0; i < n; ++i) yside[i] = sqrt_rs * inst.spike[i] + side.normal(i);
  }

  std::vector<double> value(na), v2(na);
  for (size_t a = 0; a < na; ++a) {
    value[a] = prior.atoms[a].value;
    v2[a] = value[a] * value[a];
  }

  rng::Substream stream(inst.master_seed, rng::Stream::mcmc, inst.sample_index);
  const int total_sweeps = cfg.sweeps;
  const uint64_t updates_per_chain = static_cast<uint64_t>(total_sweeps) * n;

  struct ChainState {
    std::vector<double> x;
    std::vector<detail::Kahan> f;  // f_i = sum_{j != i} Y_ij x_j
    detail::Kahan p;               // sum x^2
    detail::Kahan r1s;             // sum x_i x*_i
  };
  std::vector<ChainState> chains(cfg.chains);
  for (int c = 0; c < cfg.chains; ++c) {
    const uint64_t base = static_cast<uint64_t>(c) << 40;
    auto& st = chains[c];
    st.x.resize(n);
    for (int i = 0; i < n; ++i) {
      const double u = stream.uniform(base + i);
      double cum = 0.0;
      st.x[i] = value[na - 1];
      for (size_t a = 0; a < na; ++a) {
        cum += prior.atoms[a].weight;
        if (u <= cum) {
          st.x[i] = value[a];
          break;
        }
      }
    }
    st.f.assign(n, {});
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (j != i) st.f[i].add(Y[static_cast<size_t>(i) * n + j] * st.x[j]);
    for (int i = 0; i < n; ++i) {
      st.p.add(st.x[i] * st.x[i]);
      st.r1s.add(st.x[i] * inst.spike[i]);
    }
  }

  detail::BatchedMean m_r1s, m_r1s_sq, m_abs, m_r12, m_r12_sq, m_mass;
  std::vector<double> expo(na), pw(na);

  for (uint64_t step = 0; step < updates_per_chain; ++step) {
    const int site = static_cast<int>(step % n);
    for (int c = 0; c < cfg.chains; ++c) {
      auto& st = chains[c];
      const uint64_t base = (static_cast<uint64_t>(c) << 40) + n + step;
      const double xi = st.x[site];
      const double h = coupling * st.f[site].sum + sqrt_rs * yside[site];
      const double g = c2 * (st.p.sum - xi * xi) + 0.5 * r_side;
      double shift = -1e300;
      for (size_t a = 0; a < na; ++a) {
        expo[a] = value[a] * h - v2[a] * g;
        shift = std::max(shift, expo[a]);
      }
      double zsum = 0.0;
      for (size_t a = 0; a < na; ++a) {
        pw[a] = prior.atoms[a].weight * std::exp(expo[a] - shift);
        zsum += pw[a];
      }
      const double u = stream.uniform(base) * zsum;
      double cum = 0.0;
      size_t pick = na - 1;
      for (size_t a = 0; a < na; ++a) {
        cum += pw[a];
        if (u <= cum) {
          pick = a;
          break;
        }
      }
      const double xnew = value[pick];
      if (xnew != xi) {
        const double delta = xnew - xi;
        st.x[site] = xnew;
        st.p.add(xnew * xnew - xi * xi);
        st.r1s.add(delta * inst.spike[site]);
        const double* yrow = &Y[static_cast<size_t>(site) * n];
        for (int j = 0; j < n; ++j)
          if (j != site) st.f[j].add(yrow[j] * delta);
      }
    }
    const uint64_t done = step + 1;
    const bool measuring = done > static_cast<uint64_t>(cfg.burn_in) * n;
    if (measuring && done % static_cast<uint64_t>(cfg.thinning) == 0) {
      double r1s_m = 0.0, r1s_sq_m = 0.0, abs_m = 0.0, mass_m = 0.0;
      for (const auto& st : chains) {
        const double r = st.r1s.sum / n;
        r1s_m += r;
        r1s_sq_m += r * r;
        abs_m += std::abs(r);
        if (cfg.track_qref)
          mass_m += std::abs(std::abs(r) - *cfg.track_qref) >= cfg.track_eps ? 1.0 : 0.0;
      }
      m_r1s.add(r1s_m / cfg.chains);
      m_r1s_sq.add(r1s_sq_m / cfg.chains);
      m_abs.add(abs_m / cfg.chains);
      if (cfg.track_qref) m_mass.add(mass_m / cfg.chains);
      double r12_m = 0.0, r12_sq_m = 0.0;
      int pairs = 0;
      for (int a = 0; a < cfg.chains; ++a)
        for (int b = a + 1; b < cfg.chains; ++b, ++pairs) {
          double dot = 0.0;
          for (int i = 0; i < n; ++i) dot += chains[a].x[i] * chains[b].x[i];
          const double r = dot / n;
          r12_m += r;
          r12_sq_m += r * r;
        }
      m_r12.add(r12_m / pairs);
      m_r12_sq.add(r12_sq_m / pairs);
    }
  }

  OverlapStats out;
  out.estimator = OverlapStats::Estimator::mcmc;
  out.mean_r1s = m_r1s.mean();
  out.mean_r1s_sq = m_r1s_sq.mean();
  out.mean_abs_r1s = m_abs.mean();
  out.mean_r12 = m_r12.mean();
  out.mean_r12_sq = m_r12_sq.mean();
  out.eb_r1s = m_r1s.error_bar();
  out.eb_r1s_sq = m_r1s_sq.error_bar();
  out.eb_abs_r1s = m_abs.error_bar();
  out.eb_r12 = m_r12.error_bar();
  out.eb_r12_sq = m_r12_sq.error_bar();
  if (cfg.track_qref) {
    out.mass_abs_dev = m_mass.mean();
    out.eb_mass_abs_dev = m_mass.error_bar();
  }
  return out;
}

/// Overload resolving the default side-information strength r = lambda q*
/// from the RS solver when t < 1 and none was given.
inline OverlapStats mcmc_posterior(const Instance& inst, const Prior& prior, McmcConfig cfg,
                                   const QuadratureRule& quad) {
  if (cfg.t < 1.0 && !cfg.side_info_r)
    cfg.side_info_r = inst.lambda * solve_qstar(inst.lambda, prior, quad).qstar;
  return mcmc_posterior(inst, prior, cfg);
}

}  // namespace spikedwigner
