#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "spikedwigner/quadrature.hpp"

using namespace spikedwigner;

TEST_CASE("gauss-hermite integrates gaussian moments exactly") {
  const QuadratureRule q = gauss_hermite(100);
  double wsum = 0.0, m2 = 0.0, m4 = 0.0, m6 = 0.0, m1 = 0.0;
  for (int i = 0; i < q.order; ++i) {
    const double z = q.nodes[i], w = q.weights[i];
    wsum += w;
    m1 += w * z;
    m2 += w * z * z;
    m4 += w * z * z * z * z;
    m6 += w * std::pow(z, 6);
  }
  CHECK(std::abs(wsum - 1.0) <= 1e-12);
  CHECK(std::abs(m1) <= 1e-14);
  CHECK(m2 == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(m4 == Catch::Approx(3.0).epsilon(1e-12));
  CHECK(m6 == Catch::Approx(15.0).epsilon(1e-11));
}

TEST_CASE("gauss-hermite nodes are symmetric about zero") {
  for (int order : {41, 100}) {
    const QuadratureRule q = gauss_hermite(order);
    for (int i = 0; i < order; ++i) {
      CHECK(q.nodes[i] == -q.nodes[order - 1 - i]);
      CHECK(q.weights[i] == q.weights[order - 1 - i]);
    }
  }
}

TEST_CASE("gauss-hermite handles smooth non-polynomial integrands") {
  // E[cosh(z)] = e^{1/2}
  const QuadratureRule q = gauss_hermite(100);
  double v = 0.0;
  for (int i = 0; i < q.order; ++i) v += q.weights[i] * std::cosh(q.nodes[i]);
  CHECK(v == Catch::Approx(std::exp(0.5)).epsilon(1e-13));
}

TEST_CASE("gauss-legendre on [0,1]") {
  const QuadratureRule q = gauss_legendre01(64);
  double wsum = 0.0, i1 = 0.0, i2 = 0.0, ie = 0.0;
  for (int i = 0; i < q.order; ++i) {
    wsum += q.weights[i];
    i1 += q.weights[i] * q.nodes[i];
    i2 += q.weights[i] * q.nodes[i] * q.nodes[i];
    ie += q.weights[i] / (1.0 + q.nodes[i]);
  }
  CHECK(wsum == Catch::Approx(1.0).epsilon(1e-14));
  CHECK(i1 == Catch::Approx(0.5).epsilon(1e-14));
  CHECK(i2 == Catch::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(ie == Catch::Approx(std::log(2.0)).epsilon(1e-14));
}
