#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "spikedwigner/prior.hpp"
#include "spikedwigner/quadrature.hpp"

namespace spikedwigner {

/// Replica overlap coefficients of the scalar channel at r = lambda*qstar:
///   a0 = E[<x^2>^2] - q*^2, a1 = E[<x^2><x>^2] - q*^2, a2 = E[<x>^4] - q*^2,
/// where <.> is the scalar-channel Gibbs average at effective SNR r.
struct ReplicaCoefficients {
  double a0, a1, a2;
  double r;
  double qstar;
};

struct AsymmetryGap {
  double gap;          // psi_bar(r,r) - psi_bar(r,-r)
  double lower_bound;  // 2 E[ <dnu/dmu(x) - 1>_{mu,r}^2 ], mu the symmetrized prior
};

namespace detail {

/// Visits every (x*, z) node of the channel Gibbs measure with exponent
/// sqrt(r) z x + s x x* - r x^2 / 2, handing the visitor the node weight
/// w(x*)*w(z), the normalized atom posteriors, and log Z (max-shifted).
template <class Visitor>
inline void for_each_channel_node(double r, double s, const Prior& prior,
                                  const QuadratureRule& quad, Visitor&& visit) {
  if (r < 0.0) throw std::invalid_argument("scalar channel: r must be >= 0");
  const size_t na = prior.atoms.size();
  const double sqrt_r = std::sqrt(r);
  std::vector<double> expo(na), p(na);
  for (const auto& star : prior.atoms) {
    for (size_t iz = 0; iz < quad.nodes.size(); ++iz) {
      const double z = quad.nodes[iz];
      double shift = -1e300;
      for (size_t a = 0; a < na; ++a) {
        const double x = prior.atoms[a].value;
        expo[a] = sqrt_r * z * x + s * x * star.value - 0.5 * r * x * x;
        shift = std::max(shift, expo[a]);
      }
      double zsum = 0.0;
      for (size_t a = 0; a < na; ++a) {
        p[a] = prior.atoms[a].weight * std::exp(expo[a] - shift);
        zsum += p[a];
      }
      for (size_t a = 0; a < na; ++a) p[a] /= zsum;
      visit(star.weight * quad.weights[iz], star.value, p, std::log(zsum) + shift);
    }
  }
}

}  // namespace detail

/// Two-argument free energy psi_bar(r,s) = E_{x*,z} log int exp(sqrt(r) z x
/// + s x x* - r x^2/2) dP(x). psi_bar(r,r) = psi(r).
inline double psi_bar(double r, double s, const Prior& prior, const QuadratureRule& quad) {
  if (r == 0.0 && s == 0.0) return 0.0;
  double out = 0.0;
  detail::for_each_channel_node(r, s, prior, quad,
                                [&](double w, double, const std::vector<double>&, double logz) {
                                  out += w * logz;
                                });
  return out;
}

/// Scalar Gaussian-channel free energy psi(r); the KL divergence between the
/// laws of sqrt(r) x* + z and z. psi(0) = 0 exactly.
inline double psi(double r, const Prior& prior, const QuadratureRule& quad) {
  if (r < 0.0) throw std::invalid_argument("psi: r must be >= 0");
  if (r == 0.0) return 0.0;
  return psi_bar(r, r, prior, quad);
}

/// Explicit table of the channel Gibbs weights <.>_r, one probability vector
/// over the prior atoms per (x*, z) node. At r = 0 each row equals the prior.
struct ScalarGibbs {
  double r;
  size_t n_atoms;
  std::vector<double> weights;  // [node * n_atoms + atom], node = ix* * nz + iz
};

inline ScalarGibbs make_scalar_gibbs(double r, const Prior& prior, const QuadratureRule& quad) {
  ScalarGibbs g{r, prior.atoms.size(), {}};
  g.weights.reserve(prior.atoms.size() * prior.atoms.size() * quad.nodes.size());
  detail::for_each_channel_node(r, r, prior, quad,
                                [&](double, double, const std::vector<double>& p, double) {
                                  g.weights.insert(g.weights.end(), p.begin(), p.end());
                                });
  return g;
}

namespace detail {

inline double psi_second(double r, const Prior& prior, const QuadratureRule& quad) {
  // psi''(r) = 1/2 E[<x^2>^2 - 2 <x^2><x>^2 + <x>^4]: the four-replica form,
  // with x* traded for a replica by the channel Nishimori property.
  double acc = 0.0;
  for_each_channel_node(r, r, prior, quad,
                        [&](double w, double, const std::vector<double>& p, double) {
                          double m1 = 0.0, m2 = 0.0;
                          for (size_t a = 0; a < p.size(); ++a) {
                            const double x = prior.atoms[a].value;
                            m1 += p[a] * x;
                            m2 += p[a] * x * x;
                          }
                          const double m1sq = m1 * m1;
                          acc += w * (m2 * m2 - 2.0 * m2 * m1sq + m1sq * m1sq);
                        });
  return 0.5 * acc;
}

inline double psi_first(double r, const Prior& prior, const QuadratureRule& quad) {
  // psi'(r) = 1/2 E<x x*>_r
  double acc = 0.0;
  for_each_channel_node(r, r, prior, quad,
                        [&](double w, double star, const std::vector<double>& p, double) {
                          double m1 = 0.0;
                          for (size_t a = 0; a < p.size(); ++a) m1 += p[a] * prior.atoms[a].value;
                          acc += w * m1 * star;
                        });
  return 0.5 * acc;
}

}  // namespace detail

/// psi', psi'' from their analytic Gibbs-average expressions; psi''' by
/// Richardson-extrapolated differencing of the analytic psi'' with step
/// h = max(1e-4, 1e-3 r) (central when r - h >= 0, one-sided at the origin).
inline std::vector<double> psi_derivatives(double r, const Prior& prior,
                                           const QuadratureRule& quad, int order) {
  if (r < 0.0) throw std::invalid_argument("psi_derivatives: r must be >= 0");
  if (order < 1 || order > 3) throw std::invalid_argument("psi_derivatives: order in {1,2,3}");
  std::vector<double> out;
  out.push_back(detail::psi_first(r, prior, quad));
  if (order >= 2) out.push_back(detail::psi_second(r, prior, quad));
  if (order >= 3) {
    const double h = std::max(1e-4, 1e-3 * r);
    auto d2 = [&](double rr) { return detail::psi_second(rr, prior, quad); };
    auto diff = [&](double step) {
      if (r - step >= 0.0) return (d2(r + step) - d2(r - step)) / (2.0 * step);
      return (-3.0 * d2(r) + 4.0 * d2(r + step) - d2(r + 2.0 * step)) / (2.0 * step);
    };
    out.push_back((4.0 * diff(h / 2) - diff(h)) / 3.0);
  }
  return out;
}

/// Coefficients a(0..2) at the Gibbs measure r = lambda * qstar. qstar must be
/// the maximizer reported by the RS solver for this lambda.
inline ReplicaCoefficients replica_coefficients(double lambda, double qstar, const Prior& prior,
                                                const QuadratureRule& quad) {
  if (lambda < 0.0 || qstar < 0.0)
    throw std::invalid_argument("replica_coefficients: lambda, qstar must be >= 0");
  const double r = lambda * qstar;
  double a0 = 0.0, a1 = 0.0, a2 = 0.0;
  detail::for_each_channel_node(r, r, prior, quad,
                                [&](double w, double, const std::vector<double>& p, double) {
                                  double m1 = 0.0, m2 = 0.0;
                                  for (size_t a = 0; a < p.size(); ++a) {
                                    const double x = prior.atoms[a].value;
                                    m1 += p[a] * x;
                                    m2 += p[a] * x * x;
                                  }
                                  const double m1sq = m1 * m1;
                                  a0 += w * m2 * m2;
                                  a1 += w * m2 * m1sq;
                                  a2 += w * m1sq * m1sq;
                                });
  const double q2 = qstar * qstar;
  return ReplicaCoefficients{a0 - q2, a1 - q2, a2 - q2, r, qstar};
}

/// Appendix gap: gap = psi_bar(r,r) - psi_bar(r,-r) and its lower bound
/// 2 E[<dnu/dmu(x) - 1>_{mu,r}^2] with mu the symmetrized prior and dnu/dmu
/// the atomwise weight ratio. Both vanish for symmetric priors and at r = 0.
inline AsymmetryGap asymmetry_gap(double r, const Prior& prior, const QuadratureRule& quad) {
  if (r < 0.0) throw std::invalid_argument("asymmetry_gap: r must be >= 0");
  const double gap = psi_bar(r, r, prior, quad) - psi_bar(r, -r, prior, quad);
  const Prior mu = symmetrize(prior);
  // atomwise Radon-Nikodym derivative dnu/dmu on mu's support
  std::vector<double> ratio(mu.atoms.size(), 0.0);
  for (size_t a = 0; a < mu.atoms.size(); ++a) {
    double wnu = 0.0;
    for (const auto& atom : prior.atoms)
      if (std::abs(atom.value - mu.atoms[a].value) <= 1e-12) wnu += atom.weight;
    ratio[a] = wnu / mu.atoms[a].weight;  // mu weights are positive by construction
  }
  double lb = 0.0;
  detail::for_each_channel_node(r, r, mu, quad,
                                [&](double w, double, const std::vector<double>& p, double) {
                                  double g = 0.0;
                                  for (size_t a = 0; a < p.size(); ++a) g += p[a] * ratio[a];
                                  lb += w * (g - 1.0) * (g - 1.0);
                                });
  return AsymmetryGap{gap, 2.0 * lb};
}

}  // namespace spikedwigner
