#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "spikedwigner/prior.hpp"
#include "spikedwigner/quadrature.hpp"
#include "spikedwigner/scalar_channel.hpp"

namespace spikedwigner {

struct LocalMax {
  double q;
  double value;
};

struct RsSolution {
  double lambda = 0.0;
  double qstar = 0.0;
  double phi_rs = 0.0;
  std::vector<LocalMax> local_maxima;  // refined, deduplicated, best first
  bool near_degenerate = false;        // top two maxima within 1e-7 in value
  double stationarity_residual = 0.0;  // |2 psi'(lambda q*) - q*| when q* > 0
};

struct ThresholdReport {
  double lambda_c = 0.0;
  double spectral_threshold = 0.0;  // 1 / m2^2
  bool gap_flag = false;            // lambda_c strictly below the spectral threshold
  double bracket_width = 0.0;
  bool non_centered = false;  // m1 != 0: q* > 0 for every lambda > 0, threshold defined as 0
};

struct SolveOptions {
  int grid_size = 2000;
  double tol = 1e-12;  // refinement tolerance in q
};

inline constexpr double kQZeroTol = 1e-8;        // "q* = 0" for threshold purposes
inline constexpr double kDegenerateTol = 1e-7;   // value gap flagging near-degenerate maxima

/// RS potential F(lambda, q) = psi(lambda q) - lambda q^2 / 4.
inline double rs_potential(double lambda, double q, const Prior& prior,
                           const QuadratureRule& quad) {
  if (lambda < 0.0 || q < 0.0) throw std::invalid_argument("rs_potential: lambda, q >= 0");
  return psi(lambda * q, prior, quad) - 0.25 * lambda * q * q;
}

namespace detail {

inline double golden_max(double lo, double hi, double tol, auto&& f) {
  constexpr double invphi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - invphi * (b - a), x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

/// Global maximum of F(lambda, .) over [0, m2]: uniform grid scan, golden
/// section refinement of every grid-local maximum, then a Newton polish of
/// interior maxima on the stationarity equation 2 psi'(lambda q) = q (golden
/// section alone localizes an argmax only to ~sqrt(eps)). Ties break toward
/// the largest q. lambda = 0 returns the continuity limit q* = m1^2.
inline RsSolution solve_qstar(double lambda, const Prior& prior, const QuadratureRule& quad,
                              const SolveOptions& opts = {}) {
  if (lambda < 0.0) throw std::invalid_argument("solve_qstar: lambda >= 0");
  const PriorMoments m = moments(prior);
  RsSolution sol;
  sol.lambda = lambda;
  if (lambda < 1e-14) {  // F(0,.) is identically zero; define q*(0) by continuity
    sol.qstar = m.m1 * m.m1;
    sol.phi_rs = 0.0;
    sol.local_maxima = {{sol.qstar, 0.0}};
    return sol;
  }
  const double qmax = m.m2;
  const int n = std::max(opts.grid_size, 8);
  auto F = [&](double q) { return rs_potential(lambda, q, prior, quad); };

  std::vector<double> fv(n + 1);
  for (int i = 0; i <= n; ++i) fv[i] = F(qmax * i / n);

  std::vector<LocalMax> maxima;
  auto refine = [&](int lo_i, int hi_i) {
    const double lo = qmax * lo_i / n, hi = qmax * hi_i / n;
    double q = detail::golden_max(lo, hi, opts.tol, F);
    // Newton on g(q) = 2 psi'(lambda q) - q for interior maxima
    if (q > 16.0 * opts.tol && q < qmax - 16.0 * opts.tol) {
      double qn = q;
      for (int it = 0; it < 50; ++it) {
        const double g = 2.0 * detail::psi_first(lambda * qn, prior, quad) - qn;
        const double gp = 2.0 * lambda * detail::psi_second(lambda * qn, prior, quad) - 1.0;
        if (gp >= -1e-14) break;  // not a well-conditioned maximum
        const double step = g / gp;
        qn -= step;
        if (qn < lo || qn > hi) {
          qn = std::clamp(qn, lo, hi);
          break;
        }
        if (std::abs(step) < 1e-15) break;
      }
      if (F(qn) >= F(q) - 1e-13) q = qn;
    }
    maxima.push_back({q, F(q)});
  };

  for (int i = 0; i <= n; ++i) {
    const bool left_ok = (i == 0) || fv[i] >= fv[i - 1];
    const bool right_ok = (i == n) || fv[i] >= fv[i + 1];
    if (left_ok && right_ok) refine(std::max(i - 1, 0), std::min(i + 1, n));
  }
  // deduplicate refined maxima that collapsed to the same point
  std::sort(maxima.begin(), maxima.end(),
            [](const LocalMax& a, const LocalMax& b) { return a.q < b.q; });
  std::vector<LocalMax> dedup;
  for (const auto& mx : maxima) {
    if (!dedup.empty() && std::abs(mx.q - dedup.back().q) < 1e-6 * std::max(qmax, 1.0)) {
      if (mx.value > dedup.back().value) dedup.back() = mx;
    } else {
      dedup.push_back(mx);
    }
  }
  // best first; ties (within 1e-12) toward the largest q
  std::sort(dedup.begin(), dedup.end(), [](const LocalMax& a, const LocalMax& b) {
    if (std::abs(a.value - b.value) <= 1e-12) return a.q > b.q;
    return a.value > b.value;
  });
  sol.local_maxima = dedup;
  sol.qstar = dedup.front().q;
  sol.phi_rs = std::max(dedup.front().value, 0.0);
  if (sol.qstar <= kQZeroTol) {
    sol.qstar = 0.0;
    sol.phi_rs = 0.0;
  }
  sol.near_degenerate =
      dedup.size() >= 2 && (dedup[0].value - dedup[1].value) < kDegenerateTol;
  if (sol.qstar > kQZeroTol)
    sol.stationarity_residual =
        std::abs(2.0 * detail::psi_first(lambda * sol.qstar, prior, quad) - sol.qstar);
  return sol;
}

namespace detail {

/// Indicator of q*(lambda) > 0 for a centered prior. Raw argmax comparisons
/// are below double-precision noise within ~3e-5 of a second-order threshold
/// (F(lambda, q*) ~ (lambda - lambda_c)^3 there), so the indicator combines
/// the exact curvature condition behind the spectral bound with a scan for
/// a macroscopic first-order branch.
inline bool qstar_positive(double lambda, const Prior& prior, const QuadratureRule& quad,
                           double m2) {
  if (lambda * m2 * m2 > 1.0) return true;  // d^2F/dq^2(lambda, 0) > 0
  const RsSolution sol = solve_qstar(lambda, prior, quad);
  return sol.qstar > kQZeroTol && sol.phi_rs > 1e-13;
}

}  // namespace detail

/// Reconstruction threshold lambda_c = sup{lambda > 0 : q*(lambda) = 0} by
/// bisection, with the spectral bound 1/m2^2 reported alongside. Non-centered
/// priors have q* > 0 for every lambda > 0; the threshold is 0, flagged.
inline ThresholdReport lambda_c(const Prior& prior, const QuadratureRule& quad,
                                double bracket_tol = 1e-6) {
  const PriorMoments m = moments(prior);
  ThresholdReport rep;
  rep.spectral_threshold = 1.0 / (m.m2 * m.m2);
  if (std::abs(m.m1) > 1e-12) {
    rep.non_centered = true;
    rep.lambda_c = 0.0;
    rep.gap_flag = true;
    return rep;
  }
  double lo = 1e-9, hi = rep.spectral_threshold * (1.0 + 1e-9);
  while (hi - lo > bracket_tol) {
    const double mid = 0.5 * (lo + hi);
    if (detail::qstar_positive(mid, prior, quad, m.m2))
      hi = mid;
    else
      lo = mid;
  }
  rep.lambda_c = 0.5 * (lo + hi);
  rep.bracket_width = hi - lo;
  rep.gap_flag = rep.lambda_c < rep.spectral_threshold - 10.0 * bracket_tol;
  return rep;
}

/// Critical sparsity of the sparse Rademacher family: the rho below which
/// lambda_c(rho) < 1 strictly, located by bisection on the existence of a
/// macroscopic positive maximizer of F(1, .). (A sign criterion on psi'''(0)
/// cannot work here: psi'''(0) = -(E[X^2])^3 for every centered symmetric
/// prior, independent of the sparsity; see the solver tests.)
inline double rho_star(const QuadratureRule& quad, double tol = 1e-4) {
  auto indicator = [&](double rho) {
    const Prior prior = sparse_rademacher_prior(rho);
    const RsSolution sol = solve_qstar(1.0, prior, quad);
    return sol.qstar > 1e-6 && sol.phi_rs > 1e-13;
  };
  double lo = 0.01, hi = 0.5;
  if (!indicator(lo) || indicator(hi))
    throw std::runtime_error("rho_star: no sign change bracketed in (0.01, 0.5)");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (indicator(mid))
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Minimal mean squared error of estimating a spike entry: m2 - q*(lambda).
inline double mmse(double lambda, const Prior& prior, const QuadratureRule& quad) {
  return moments(prior).m2 - solve_qstar(lambda, prior, quad).qstar;
}

}  // namespace spikedwigner
