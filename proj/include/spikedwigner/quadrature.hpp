#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace spikedwigner {

/// Quadrature rule normalized for expectations: sum of weights is 1 and
/// E[f(Z)] ~ sum_i w_i f(z_i) with Z ~ N(0,1) (Gauss-Hermite), or
/// int_0^1 f ~ sum_i w_i f(z_i) (Gauss-Legendre on [0,1], weights sum to 1).
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int order = 0;
};

/// Gauss-Hermite rule for the standard normal weight, by Golub-Welsch on the
/// probabilists' Hermite recurrence (Jacobi matrix with off-diagonal sqrt(k)).
/// Nodes come out symmetric about 0; +/- pairs are symmetrized exactly and
/// the weights renormalized so they sum to 1 to the last bit.
inline QuadratureRule gauss_hermite(int order) {
  if (order < 1) throw std::invalid_argument("gauss_hermite: order >= 1");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double b = std::sqrt(static_cast<double>(k));
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  if (es.info() != Eigen::Success) throw std::runtime_error("gauss_hermite: eigensolver failed");
  QuadratureRule rule;
  rule.order = order;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    rule.nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = v0 * v0;  // total mass beta_0 = 1
  }
  // enforce exact +/- symmetry of the node set
  for (int i = 0, j = order - 1; i < j; ++i, --j) {
    const double z = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -z;
    rule.nodes[j] = z;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
  double wsum = 0.0;
  for (double w : rule.weights) wsum += w;
  for (double& w : rule.weights) w /= wsum;
  return rule;
}

/// Gauss-Legendre rule on [0,1] (weights sum to 1). Nodes by Newton iteration
/// on P_n with the standard three-term recurrence.
inline QuadratureRule gauss_legendre01(int order) {
  if (order < 1) throw std::invalid_argument("gauss_legendre01: order >= 1");
  QuadratureRule rule;
  rule.order = order;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const int n = order;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));  // Chebyshev initial guess
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = 0.5 * (1.0 - x);  // map (-1,1) -> (0,1), descending x -> ascending node
    rule.nodes[n - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[i] = 0.5 * w;
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  return rule;
}

}  // namespace spikedwigner
