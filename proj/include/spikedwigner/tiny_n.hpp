#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "spikedwigner/prior.hpp"
#include "spikedwigner/quadrature.hpp"

namespace spikedwigner {

enum class TinyObservable { gibbs_r12, gibbs_r1s, logl_planted, logl_null };

/// Population expectations at n in {2,3} by exact tensor quadrature over the
/// n(n-1)/2 Gaussian noise entries and exact summation over spike and
/// posterior configurations. Accurate to quadrature error (~1e-8 with 40
/// nodes per dimension); the reference point for Nishimori checks.
inline double tiny_n_expectation_oracle(int n, double lambda, const Prior& prior,
                                        const QuadratureRule& quad, TinyObservable obs) {
  if (n != 2 && n != 3) throw std::invalid_argument("tiny_n_expectation_oracle: n in {2,3}");
  if (lambda < 0.0) throw std::invalid_argument("tiny_n_expectation_oracle: lambda >= 0");
  const int m = n * (n - 1) / 2;  // noise dimensions
  const size_t na = prior.atoms.size();
  const double coupling = std::sqrt(lambda / n);
  const double c2 = lambda / (2.0 * n);

  // configurations of the posterior enumeration
  const size_t nconf = [&] {
    size_t c = 1;
    for (int i = 0; i < n; ++i) c *= na;
    return c;
  }();
  std::vector<std::vector<int>> confs(nconf, std::vector<int>(n));
  for (size_t c = 0; c < nconf; ++c) {
    size_t t = c;
    for (int i = 0; i < n; ++i) {
      confs[c][i] = static_cast<int>(t % na);
      t /= na;
    }
  }
  auto conf_logw = [&](const std::vector<int>& conf) {
    double lw = 0.0;
    for (int i = 0; i < n; ++i) lw += std::log(prior.atoms[conf[i]].weight);
    return lw;
  };

  // evaluates the inner observable for one observation matrix Y (upper tri)
  auto inner = [&](const std::vector<double>& y, const std::vector<double>& star) {
    std::vector<double> expo(nconf);
    double shift = -1e300;
    for (size_t c = 0; c < nconf; ++c) {
      double s1 = 0.0, s2 = 0.0;
      int e = 0;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j, ++e) {
          const double xi = prior.atoms[confs[c][i]].value;
          const double xj = prior.atoms[confs[c][j]].value;
          s1 += y[e] * xi * xj;
          s2 += xi * xi * xj * xj;
        }
      expo[c] = coupling * s1 - c2 * s2 + conf_logw(confs[c]);
      shift = std::max(shift, expo[c]);
    }
    double z = 0.0;
    std::vector<double> mag(n, 0.0);
    for (size_t c = 0; c < nconf; ++c) {
      const double w = std::exp(expo[c] - shift);
      z += w;
      for (int i = 0; i < n; ++i) mag[i] += w * prior.atoms[confs[c][i]].value;
    }
    for (int i = 0; i < n; ++i) mag[i] /= z;
    switch (obs) {
      case TinyObservable::logl_planted:
      case TinyObservable::logl_null:
        return std::log(z) + shift;
      case TinyObservable::gibbs_r12: {
        double r = 0.0;
        for (int i = 0; i < n; ++i) r += mag[i] * mag[i];
        return r / n;
      }
      case TinyObservable::gibbs_r1s: {
        double r = 0.0;
        for (int i = 0; i < n; ++i) r += mag[i] * star[i];
        return r / n;
      }
    }
    return 0.0;
  };

  const bool planted = obs != TinyObservable::logl_null;
  std::vector<double> y(m), star(n, 0.0);
  double total = 0.0;

  // spike configurations (a single empty one under the null model)
  const size_t nspike = planted ? nconf : 1;
  for (size_t sc = 0; sc < nspike; ++sc) {
    double wspike = 1.0;
    if (planted) {
      for (int i = 0; i < n; ++i) {
        star[i] = prior.atoms[confs[sc][i]].value;
        wspike *= prior.atoms[confs[sc][i]].weight;
      }
    }
    // tensor quadrature over the noise entries
    std::vector<int> idx(m, 0);
    for (;;) {
      double wnode = wspike;
      int e = 0;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j, ++e) {
          const double w_ij = quad.nodes[idx[e]];
          y[e] = w_ij + (planted ? coupling * star[i] * star[j] : 0.0);
          wnode *= quad.weights[idx[e]];
        }
      total += wnode * inner(y, star);
      int k = 0;
      while (k < m && idx[k] == quad.order - 1) idx[k++] = 0;
      if (k == m) break;
      ++idx[k];
    }
  }
  return total;
}

}  // namespace spikedwigner
