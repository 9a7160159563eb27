#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "spikedwigner/prior.hpp"
#include "spikedwigner/quadrature.hpp"
#include "spikedwigner/rs_solver.hpp"
#include "spikedwigner/scalar_channel.hpp"

namespace spikedwigner {

using Matrix3 = std::array<std::array<double, 3>, 3>;

/// Everything needed for the O(1) finite-size correction at one lambda:
/// replica coefficients, the cavity matrix with its eigenvalues mu1 >= mu2,
/// psi_rs (when mu1 < 1), and the t = 1 solution of (I - tA)c = a.
struct CorrectionBundle {
  double lambda = 0.0;
  ReplicaCoefficients coeffs{};
  double mu1 = 0.0, mu2 = 0.0;
  Matrix3 cavity_matrix{};
  std::optional<double> psi_rs;     // absent when mu1 >= 1 - 1e-9
  std::array<double, 3> c_vector{};  // (I - A)^{-1} a, defined when valid
  bool valid = false;
  bool correction_applies = false;  // lambda < lambda_c, or the prior is asymmetric
  bool near_degenerate = false;  // passed through from the RS solver
};

struct CltParams {
  double mu;      // 1/4 (-log(1-lambda) - lambda)
  double sigma2;  // exactly 2 mu
};

struct DetectionFormulasResult {
  double kl;        // = mu(lambda)
  double type2;     // 1/2 erfc(sqrt(mu)/2)
  double type1;     // same magnitude (Rademacher statement; conjectural otherwise)
  double err_star;  // erfc(sqrt(mu)/2)
  double tv;        // 1 - err_star
};

struct CavitySolution {
  std::array<double, 3> c;            // direct 3x3 elimination (ground truth)
  std::array<double, 3> closed_form;  // the explicit long-form expressions
};

namespace detail {

inline Matrix3 cavity_matrix_of(double lambda, const ReplicaCoefficients& a) {
  return Matrix3{{{lambda * a.a0, lambda * -2 * a.a1, lambda * a.a2},
                  {lambda * a.a1, lambda * (a.a0 - a.a1 - 2 * a.a2),
                   lambda * (-2 * a.a1 + 3 * a.a2)},
                  {lambda * a.a2, lambda * (4 * a.a1 - 6 * a.a2),
                   lambda * (a.a0 - 6 * a.a1 + 6 * a.a2)}}};
}

}  // namespace detail

inline CorrectionBundle correction_bundle(double lambda, const Prior& prior,
                                          const QuadratureRule& quad) {
  if (lambda < 0.0) throw std::invalid_argument("correction_bundle: lambda >= 0");
  const RsSolution rs = solve_qstar(lambda, prior, quad);
  CorrectionBundle b;
  b.lambda = lambda;
  b.near_degenerate = rs.near_degenerate;
  b.coeffs = replica_coefficients(lambda, rs.qstar, prior, quad);
  const auto& a = b.coeffs;
  b.mu1 = lambda * (a.a0 - 2 * a.a1 + a.a2);
  b.mu2 = lambda * (a.a0 - 3 * a.a1 + 2 * a.a2);
  b.cavity_matrix = detail::cavity_matrix_of(lambda, a);
  b.correction_applies = rs.qstar <= kQZeroTol || symmetry_defect(prior) > 1e-12;
  b.valid = b.mu1 < 1.0 - 1e-9;
  if (b.valid) {
    b.psi_rs = 0.25 * (std::log(1.0 - b.mu1) - 2.0 * std::log(1.0 - b.mu2) +
                       lambda * (4 * a.a1 - 3 * a.a2) / (1.0 - b.mu1) - lambda * a.a0);
  }
  return b;
}

/// Limit of N E<(R_{1,*} - q*)^2>_t. At lambda = 0 the continuity limit a0.
inline double delta_rs(double lambda, double t, const CorrectionBundle& bundle) {
  if (!bundle.valid) throw std::domain_error("delta_rs: bundle invalid (mu1 >= 1)");
  if (t < 0.0 || t > 1.0) throw std::invalid_argument("delta_rs: t in [0,1]");
  if (t * bundle.mu1 >= 1.0) throw std::domain_error("delta_rs: t mu1 >= 1");
  const auto& a = bundle.coeffs;
  if (lambda < 1e-12) return a.a0;
  const double d1 = 1.0 - t * bundle.mu1, d2 = 1.0 - t * bundle.mu2;
  return (-bundle.mu1 / d1 + 2.0 * bundle.mu2 / d2 +
          lambda * (4 * a.a1 - 3 * a.a2) / (d1 * d1)) /
         lambda;
}

/// psi_rs by Gauss-Legendre integration of the Delta_RS integrand over
/// t in [0,1]; an independent route that must match the closed form.
inline double psi_rs_via_integral(double lambda, const CorrectionBundle& bundle,
                                  int integration_steps = 64) {
  if (!bundle.valid) throw std::domain_error("psi_rs_via_integral: bundle invalid");
  const auto& a = bundle.coeffs;
  const QuadratureRule gl = gauss_legendre01(integration_steps);
  double integral = 0.0;
  for (int i = 0; i < gl.order; ++i) {
    const double t = gl.nodes[i];
    const double d1 = 1.0 - t * bundle.mu1, d2 = 1.0 - t * bundle.mu2;
    integral += gl.weights[i] * (-bundle.mu1 / d1 + 2.0 * bundle.mu2 / d2 +
                                 lambda * (4 * a.a1 - 3 * a.a2) / (d1 * d1));
  }
  return 0.25 * integral - 0.25 * lambda * a.a0;
}

/// Solves (I - tA)c = a by direct elimination with partial pivoting, and also
/// evaluates the explicit closed forms for c(0), c(1), c(2). Elimination is
/// the ground truth; the closed forms are the cross-check.
inline CavitySolution solve_cavity_system(double lambda, double t, const CorrectionBundle& bundle) {
  if (!bundle.valid) throw std::domain_error("solve_cavity_system: bundle invalid");
  if (t < 0.0 || t > 1.0) throw std::invalid_argument("solve_cavity_system: t in [0,1]");
  if (t * bundle.mu1 >= 1.0) throw std::domain_error("solve_cavity_system: t mu1 >= 1");
  const auto& ac = bundle.coeffs;
  double M[3][4] = {};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) M[i][j] = (i == j ? 1.0 : 0.0) - t * bundle.cavity_matrix[i][j];
  M[0][3] = ac.a0;
  M[1][3] = ac.a1;
  M[2][3] = ac.a2;
  double det = 1.0;
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(M[r][col]) > std::abs(M[piv][col])) piv = r;
    if (piv != col) {
      std::swap(M[piv], M[col]);
      det = -det;
    }
    det *= M[col][col];
    if (std::abs(M[col][col]) < 1e-300) throw std::domain_error("solve_cavity_system: singular");
    for (int r = col + 1; r < 3; ++r) {
      const double f = M[r][col] / M[col][col];
      for (int c = col; c < 4; ++c) M[r][c] -= f * M[col][c];
    }
  }
  if (std::abs(det) < 1e-12) throw std::domain_error("solve_cavity_system: singular system");
  CavitySolution out;
  for (int i = 2; i >= 0; --i) {
    double s = M[i][3];
    for (int j = i + 1; j < 3; ++j) s -= M[i][j] * out.c[j];
    out.c[i] = s / M[i][i];
  }
  const double lt = lambda * t;
  if (std::abs(lt) < 1e-8) {
    out.closed_form = {ac.a0, ac.a1, ac.a2};  // t -> 0 limit of the displays
  } else {
    const double d1 = 1.0 - t * bundle.mu1, d2 = 1.0 - t * bundle.mu2;
    const double top = -3.0 + 3.0 * lt * ac.a0 - 2.0 * lt * ac.a1;
    out.closed_form[0] = (-1.0 + 2.0 / d2 + 2.0 / d1 + top / (d1 * d1)) / lt;
    out.closed_form[1] = (top / (d1 * d1) + 3.0 / d2) / lt;
    out.closed_form[2] = (4.0 * lt * ac.a1 * ac.a1 +
                          (1.0 - lt * ac.a0 - 5.0 * lt * ac.a1) * ac.a2 +
                          2.0 * lt * ac.a2 * ac.a2) /
                         (d1 * d1 * d2);
  }
  return out;
}

/// CLT parameters of the log-likelihood ratio below lambda_c:
/// mu = 1/4 (-log(1-lambda) - lambda), sigma^2 = 2 mu exactly.
inline CltParams clt_params(double lambda) {
  if (lambda < 0.0 || lambda >= 1.0) throw std::domain_error("clt_params: lambda in [0,1)");
  const double mu = 0.25 * (-std::log1p(-lambda) - lambda);
  return CltParams{mu, 2.0 * mu};
}

/// Limiting KL, Type-I/II errors, optimal risk and total variation of the
/// likelihood-ratio test. The Type-I (hence err/tv) formula is proved for the
/// Rademacher prior and conjectured for general centered priors.
inline DetectionFormulasResult detection_formulas(double lambda) {
  const CltParams p = clt_params(lambda);
  const double half = 0.5 * std::erfc(std::sqrt(p.mu) / 2.0);
  return DetectionFormulasResult{p.mu, half, half, 2.0 * half, 1.0 - 2.0 * half};
}

}  // namespace spikedwigner
