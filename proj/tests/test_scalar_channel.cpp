#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "spikedwigner/prior.hpp"
#include "spikedwigner/quadrature.hpp"
#include "spikedwigner/scalar_channel.hpp"

using namespace spikedwigner;

namespace {

const QuadratureRule& quad100() {
  static QuadratureRule q = gauss_hermite(100);
  return q;
}

/// Independent oracle: fit psi(r) = c2 r^2 + c3 r^3 + c4 r^4 + c5 r^5 on a
/// small grid (centered priors have psi(0) = psi'(0) = 0) and return 6*c3.
/// Shares nothing with the psi_derivatives differencing path.
double psi3_at_zero_fit_oracle(const Prior& prior) {
  const QuadratureRule q = gauss_hermite(160);
  const double h = 0.01;
  const std::vector<double> rs = {h, 2 * h, 3 * h, 4 * h};
  double A[4][5];
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) A[i][j] = std::pow(rs[i], j + 2);
    A[i][4] = psi(rs[i], prior, q);
  }
  for (int col = 0; col < 4; ++col) {  // gaussian elimination
    int piv = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    std::swap(A[piv], A[col]);
    for (int r = col + 1; r < 4; ++r) {
      const double f = A[r][col] / A[col][col];
      for (int c = col; c < 5; ++c) A[r][c] -= f * A[col][c];
    }
  }
  double coef[4];
  for (int i = 3; i >= 0; --i) {
    double s = A[i][4];
    for (int j = i + 1; j < 4; ++j) s -= A[i][j] * coef[j];
    coef[i] = s / A[i][i];
  }
  return 6.0 * coef[1];
}

}  // namespace

TEST_CASE("psi(0) = 0 exactly") {
  CHECK(psi(0.0, rademacher_prior(), quad100()) == 0.0);
  CHECK(psi(0.0, two_point_centered_prior(0.3), quad100()) == 0.0);
  CHECK_THROWS_AS(psi(-0.1, rademacher_prior(), quad100()), std::invalid_argument);
}

TEST_CASE("psi small-r Taylor oracle") {
  // psi(r) = r^2/4 - r^3/6 + O(r^4) for centered unit-variance priors; at
  // r = 0.01 the cubic term is 1.67e-7, so the quadratic oracle is good to
  // 2e-7 and the cubic one to the r^4 scale.
  const double r = 0.01;
  const double v = psi(r, rademacher_prior(), quad100());
  CHECK(std::abs(v - r * r / 4.0) <= 2e-7);
  CHECK(std::abs(v - (r * r / 4.0 - r * r * r / 6.0)) <= 1e-8);
}

TEST_CASE("psi rademacher closed-form reduction with a 200-node oracle rule") {
  // psi(r) = E_z log cosh(r + sqrt(r) z) - r/2 for the Rademacher prior
  const QuadratureRule oracle = gauss_hermite(200);
  for (double r : {0.1, 0.5, 2.0}) {
    double expect = 0.0;
    for (int i = 0; i < oracle.order; ++i)
      expect += oracle.weights[i] * std::log(std::cosh(r + std::sqrt(r) * oracle.nodes[i]));
    expect -= r / 2.0;
    CHECK(psi(r, rademacher_prior(), quad100()) == Catch::Approx(expect).margin(1e-8));
  }
}

TEST_CASE("point mass prior: psi(r) = r v^2 / 2 in closed form") {
  for (double r : {0.3, 1.0}) {
    CHECK(psi(r, point_mass_prior(1.0), quad100()) == Catch::Approx(r / 2.0).margin(1e-12));
    CHECK(psi(r, point_mass_prior(2.0), quad100()) == Catch::Approx(2.0 * r).margin(1e-11));
  }
}

TEST_CASE("psi_bar(r,r) equals psi(r) through the shared code path") {
  for (double r : {0.0, 0.3, 1.7}) {
    CHECK(psi_bar(r, r, rademacher_prior(), quad100()) ==
          psi(r, rademacher_prior(), quad100()));
  }
}

TEST_CASE("psi_bar(r,-r) = psi_bar(r,r) for symmetric priors") {
  for (const Prior& p : {rademacher_prior(), sparse_rademacher_prior(0.3)}) {
    const double d = psi_bar(0.8, -0.8, p, quad100()) - psi_bar(0.8, 0.8, p, quad100());
    CHECK(std::abs(d) <= 1e-10);
  }
}

TEST_CASE("psi_bar(r,-r) < psi_bar(r,r) strictly for the asymmetric prior") {
  const Prior p = two_point_centered_prior(0.3);
  CHECK(psi_bar(0.8, -0.8, p, quad100()) < psi_bar(0.8, 0.8, p, quad100()));
}

TEST_CASE("psi_bar is strictly convex in s") {
  const double ds = 1e-3;
  for (const Prior& p : {rademacher_prior(), two_point_centered_prior(0.3)}) {
    for (double r : {0.5, 1.0, 2.0}) {
      for (double s : {-r, -0.3 * r, 0.0, 0.4 * r, r}) {
        const double second = psi_bar(r, s + ds, p, quad100()) -
                              2.0 * psi_bar(r, s, p, quad100()) +
                              psi_bar(r, s - ds, p, quad100());
        CHECK(second > 0.0);
      }
    }
  }
}

TEST_CASE("psi is nondecreasing and convex on [0,5]") {
  const Prior p = rademacher_prior();
  std::vector<double> vals;
  for (int i = 0; i <= 50; ++i) vals.push_back(psi(5.0 * i / 50, p, quad100()));
  for (size_t i = 1; i < vals.size(); ++i) CHECK(vals[i] >= vals[i - 1] - 1e-12);
  for (size_t i = 1; i + 1 < vals.size(); ++i)
    CHECK(vals[i + 1] - 2 * vals[i] + vals[i - 1] >= -1e-8);
}

TEST_CASE("psi derivatives at zero: psi'(0) = m1^2/2, psi''(0) = Var^2/2") {
  const auto d_rad = psi_derivatives(0.0, rademacher_prior(), quad100(), 3);
  CHECK(std::abs(d_rad[0]) <= 1e-14);
  CHECK(d_rad[1] == Catch::Approx(0.5).margin(1e-12));
  CHECK(d_rad[2] < 0.0);  // finite-difference oracle below pins the value

  const auto d_pm = psi_derivatives(0.0, point_mass_prior(1.0), quad100(), 2);
  CHECK(d_pm[0] == Catch::Approx(0.5).margin(1e-13));  // m1^2 / 2
  CHECK(std::abs(d_pm[1]) <= 1e-12);                   // Var = 0

  CHECK_THROWS_AS(psi_derivatives(0.0, rademacher_prior(), quad100(), 4), std::invalid_argument);
}

TEST_CASE("analytic psi' matches a central finite difference of psi") {
  const double r = 0.7, h = 1e-5;
  for (const Prior& p : {rademacher_prior(), sparse_rademacher_prior(0.3),
                         two_point_centered_prior(0.3)}) {
    const double fd = (psi(r + h, p, quad100()) - psi(r - h, p, quad100())) / (2 * h);
    CHECK(psi_derivatives(r, p, quad100(), 1)[0] == Catch::Approx(fd).margin(1e-6));
  }
}

TEST_CASE("analytic psi'' matches a finite difference of psi'") {
  const double r = 0.6, h = 1e-5;
  const Prior p = sparse_rademacher_prior(0.3);
  const double fd = (psi_derivatives(r + h, p, quad100(), 1)[0] -
                     psi_derivatives(r - h, p, quad100(), 1)[0]) /
                    (2 * h);
  CHECK(psi_derivatives(r, p, quad100(), 2)[1] == Catch::Approx(fd).margin(1e-6));
}

TEST_CASE("psi'''(0) = -m2^3 for centered symmetric priors (fit oracle)") {
  // The third derivative does not depend on higher moments; in particular it
  // is identically -1 across the sparse Rademacher family, so it carries no
  // sparsity criterion (see the solver for the rho* construction).
  for (const Prior& p : {rademacher_prior(), sparse_rademacher_prior(0.3),
                         sparse_rademacher_prior(0.05)}) {
    const double m2 = moments(p).m2;
    const double oracle = psi3_at_zero_fit_oracle(p);
    const double computed = psi_derivatives(0.0, p, quad100(), 3)[2];
    CHECK(oracle == Catch::Approx(-m2 * m2 * m2).margin(5e-2));
    CHECK(computed == Catch::Approx(-m2 * m2 * m2).margin(1e-4));
  }
}

TEST_CASE("scalar channel Nishimori: E<x>x* = E<x>^2 at any r") {
  const Prior p = two_point_centered_prior(0.3);
  const QuadratureRule& q = quad100();
  double lhs = 0.0, rhs = 0.0;
  detail::for_each_channel_node(0.8, 0.8, p, q,
                                [&](double w, double star, const std::vector<double>& pw, double) {
                                  double m1 = 0.0;
                                  for (size_t a = 0; a < pw.size(); ++a)
                                    m1 += pw[a] * p.atoms[a].value;
                                  lhs += w * m1 * star;
                                  rhs += w * m1 * m1;
                                });
  CHECK(lhs == Catch::Approx(rhs).margin(1e-12));
}

TEST_CASE("scalar gibbs weights reduce to the prior at r = 0") {
  const Prior p = sparse_rademacher_prior(0.3);
  const ScalarGibbs g = make_scalar_gibbs(0.0, p, quad100());
  for (size_t node = 0; node < g.weights.size() / g.n_atoms; ++node) {
    double sum = 0.0;
    for (size_t a = 0; a < g.n_atoms; ++a) {
      const double w = g.weights[node * g.n_atoms + a];
      CHECK(w == Catch::Approx(p.atoms[a].weight).margin(1e-14));
      sum += w;
    }
    CHECK(sum == Catch::Approx(1.0).margin(1e-14));
  }
}

TEST_CASE("replica coefficients") {
  SECTION("centered unit-variance prior below threshold: (1, 0, 0)") {
    for (const Prior& p : {rademacher_prior(), sparse_rademacher_prior(0.3)}) {
      const ReplicaCoefficients a = replica_coefficients(0.5, 0.0, p, quad100());
      CHECK(a.a0 == Catch::Approx(1.0).margin(1e-12));
      CHECK(std::abs(a.a1) <= 1e-12);
      CHECK(std::abs(a.a2) <= 1e-12);
    }
  }
  SECTION("point mass: Gibbs averages are deterministic, q* = 1 gives (0,0,0)") {
    const ReplicaCoefficients a = replica_coefficients(2.0, 1.0, point_mass_prior(1.0), quad100());
    CHECK(std::abs(a.a0) <= 1e-12);
    CHECK(std::abs(a.a1) <= 1e-12);
    CHECK(std::abs(a.a2) <= 1e-12);
  }
  SECTION("Cauchy-Schwarz ordering a0 >= a1 >= a2") {
    // q* for rademacher at lambda = 1.5 from the independent bisection oracle
    // on q = E_z tanh(lambda q + sqrt(lambda q) z) (test_rs_solver re-derives it)
    const ReplicaCoefficients a =
        replica_coefficients(1.5, 0.39418613377182548, rademacher_prior(), quad100());
    CHECK(a.a0 >= a.a1 - 1e-12);
    CHECK(a.a1 >= a.a2 - 1e-12);
    CHECK(a.a2 > 0.0);
  }
}

TEST_CASE("quadrature-order stability at 100 vs 200 nodes") {
  // operating grid r <= 1.5 (where every downstream formula evaluates);
  // beyond r ~ 2 the 100-node rule is only good to ~1e-9
  const QuadratureRule q200 = gauss_hermite(200);
  for (const Prior& p : {rademacher_prior(), sparse_rademacher_prior(0.3),
                         two_point_centered_prior(0.3)}) {
    for (double r : {0.2, 0.5, 1.0, 1.5}) {
      CHECK(std::abs(psi(r, p, quad100()) - psi(r, p, q200)) < 1e-10);
      CHECK(std::abs(psi_bar(r, -r, p, quad100()) - psi_bar(r, -r, p, q200)) < 1e-10);
    }
    const ReplicaCoefficients a1 = replica_coefficients(0.8, 0.2, p, quad100());
    const ReplicaCoefficients a2 = replica_coefficients(0.8, 0.2, p, q200);
    CHECK(std::abs(a1.a0 - a2.a0) < 1e-10);
    CHECK(std::abs(a1.a1 - a2.a1) < 1e-10);
    CHECK(std::abs(a1.a2 - a2.a2) < 1e-10);
  }
}

TEST_CASE("asymmetry gap") {
  SECTION("rademacher: nu = mu, both sides vanish") {
    const AsymmetryGap g = asymmetry_gap(1.0, rademacher_prior(), quad100());
    CHECK(std::abs(g.gap) <= 1e-10);
    CHECK(std::abs(g.lower_bound) <= 1e-12);
  }
  SECTION("r = 0: channel carries no information") {
    const AsymmetryGap g = asymmetry_gap(0.0, two_point_centered_prior(0.3), quad100());
    CHECK(std::abs(g.gap) <= 1e-12);
    CHECK(std::abs(g.lower_bound) <= 1e-12);
  }
  SECTION("asymmetric prior: gap >= lower bound > 0, increasing in r") {
    const Prior p = two_point_centered_prior(0.3);
    const AsymmetryGap g05 = asymmetry_gap(0.5, p, quad100());
    const AsymmetryGap g10 = asymmetry_gap(1.0, p, quad100());
    CHECK(g05.lower_bound > 0.0);
    CHECK(g10.lower_bound > g05.lower_bound);
    CHECK(g05.gap >= g05.lower_bound - 1e-9);
    CHECK(g10.gap >= g10.lower_bound - 1e-9);
  }
}
