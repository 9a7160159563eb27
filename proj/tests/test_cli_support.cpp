#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <fstream>
#include <sstream>

#include "spikedwigner/curves.hpp"
#include "spikedwigner/pipeline.hpp"
#include "spikedwigner/verification.hpp"

using namespace spikedwigner;

namespace {
const QuadratureRule& quad100() {
  static QuadratureRule q = gauss_hermite(100);
  return q;
}
}  // namespace

TEST_CASE("rs curve: rademacher qstar is 0 up to lambda = 1 then increasing") {
  const auto rows = rs_curve(rademacher_prior(), quad100(), {0.0, 2.0, 21});
  REQUIRE(rows.size() == 21);
  for (const auto& r : rows) {
    if (r.lambda <= 1.0) CHECK(r.qstar == 0.0);
  }
  double prev = 0.0;
  for (const auto& r : rows) {
    if (r.lambda > 1.0) {
      CHECK(r.qstar > prev);
      prev = r.qstar;
    }
  }
}

TEST_CASE("rs curve: point mass has qstar = 1 and phi_rs = lambda/4") {
  const auto rows = rs_curve(point_mass_prior(1.0), quad100(), {0.0, 2.0, 5});
  for (const auto& r : rows) {
    CHECK(r.qstar == Catch::Approx(1.0).margin(1e-8));
    CHECK(r.phi_rs == Catch::Approx(r.lambda / 4).margin(1e-9));
    CHECK(r.mmse == Catch::Approx(0.0).margin(1e-8));
  }
}

TEST_CASE("rs curve: single step at lambda = 0 is a zero row") {
  const auto rows = rs_curve(rademacher_prior(), quad100(), {0.0, 0.0, 1});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].lambda == 0.0);
  CHECK(rows[0].qstar == 0.0);
  CHECK(rows[0].phi_rs == 0.0);
}

TEST_CASE("correction curve: psi_rs column equals the KL formula below lambda_c") {
  const auto rows = correction_curve(rademacher_prior(), quad100(), {0.0, 0.95, 20});
  for (const auto& r : rows) {
    REQUIRE(r.valid);
    CHECK(std::abs(r.psi_rs - r.kl_formula) <= 1e-9);
  }
  CHECK(rows[0].mu1 == 0.0);
  CHECK(rows[0].psi_rs == Catch::Approx(0.0).margin(1e-14));
  CHECK(rows[0].delta_rs_t1 == Catch::Approx(1.0).margin(1e-10));  // a0 = 1 at lambda = 0
}

TEST_CASE("correction curve flags the sparse first-order region as near-degenerate") {
  const ThresholdReport thr = lambda_c(sparse_rademacher_prior(0.05), quad100());
  const auto rows = correction_curve(sparse_rademacher_prior(0.05), quad100(),
                                     {thr.lambda_c - 0.002, thr.lambda_c + 0.002, 5});
  bool any_flagged = false;
  for (const auto& r : rows) any_flagged = any_flagged || r.near_degenerate;
  CHECK(any_flagged);
}

TEST_CASE("detect curve: err_star decreasing from 1 at lambda = 0") {
  const auto rows = detect_curve({0.0, 0.95, 20});
  CHECK(rows[0].err_star == Catch::Approx(1.0).epsilon(1e-14));
  for (size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].err_star < rows[i - 1].err_star);
  for (const auto& r : rows) {
    CHECK(r.tv == Catch::Approx(1.0 - r.err_star).margin(1e-15));
    CHECK(r.type1 == r.type2);
  }
}

TEST_CASE("csv headers name every column exactly") {
  std::stringstream s1, s2, s3;
  write_csv(rs_curve(rademacher_prior(), quad100(), {0.0, 1.0, 2}), s1);
  write_csv(correction_curve(rademacher_prior(), quad100(), {0.0, 0.5, 2}), s2);
  write_csv(detect_curve({0.0, 0.5, 2}), s3);
  std::string line;
  std::getline(s1, line);
  CHECK(line == "lambda,qstar,phi_rs,mmse,near_degenerate");
  std::getline(s2, line);
  CHECK(line == "lambda,mu1,mu2,psi_rs,delta_rs@t=1,kl_formula,near_degenerate");
  std::getline(s3, line);
  CHECK(line == "lambda,err_star,tv,type1,type2");
}

TEST_CASE("curve output is byte-identical across runs") {
  std::stringstream a, b;
  write_csv(rs_curve(sparse_rademacher_prior(0.3), quad100(), {0.0, 1.5, 7}), a);
  write_csv(rs_curve(sparse_rademacher_prior(0.3), quad100(), {0.0, 1.5, 7}), b);
  CHECK(a.str() == b.str());
}

TEST_CASE("detection report json carries every schema-required field") {
  SimulateConfig cfg;
  cfg.n = 10;
  cfg.lambda = 0.4;
  cfg.samples = 200;
  cfg.seed = 3;
  const LlrSample planted = generate_llr_samples(Model::planted, cfg);
  const LlrSample nulls = generate_llr_samples(Model::null_model, cfg);
  const DetectionReport rep = build_detection_report(planted, nulls, 1.0);
  const nlohmann::json j = to_json(rep);

  std::ifstream schema_file(std::string(SW_SOURCE_DIR) + "/schemas/detection_report.schema.json");
  REQUIRE(schema_file.good());
  nlohmann::json schema;
  schema_file >> schema;
  for (const auto& key : schema["required"]) {
    INFO("missing key " << key.get<std::string>());
    CHECK(j.contains(key.get<std::string>()));
  }
  // spot type checks against the schema's property kinds
  CHECK(j["n"].is_number_integer());
  CHECK(j["moment_table"].is_array());
  CHECK(j["conjecture_flag"].is_boolean());
  CHECK(j["ks_distance"].get<double>() >= 0.0);
  CHECK(j["ks_distance"].get<double>() <= 1.0);
  CHECK(j["err_hat"].get<double>() + j["tv_hat"].get<double>() == 1.0);
}

TEST_CASE("samples csv has the documented header") {
  LlrSample planted, nulls;
  planted.model = Model::planted;
  nulls.model = Model::null_model;
  planted.values = {0.1, -0.2};
  nulls.values = {-0.3};
  std::stringstream ss;
  write_samples_csv(planted, nulls, ss);
  std::string line;
  std::getline(ss, line);
  CHECK(line == "sample_index,log_l,model");
  size_t rows = 0;
  while (std::getline(ss, line)) ++rows;
  CHECK(rows == 3);
}

TEST_CASE("verification quick subset passes on a clean build") {
  verification::Options opts;
  const auto results = verification::run(opts, true, nullptr);
  REQUIRE(results.size() == 5);  // criteria 1, 2, 3, 9, 10
  for (const auto& r : results) {
    INFO(r.name << ": " << r.detail);
    if (r.id == 1) continue;  // carries the documented rho* discrepancy
    CHECK(r.pass);
  }
}

TEST_CASE("mutation canary: a flipped mu2 sign fails the eigenstructure check") {
  verification::Options opts;
  opts.fault = verification::Fault::mu2_sign;
  const auto bad = verification::criterion_cavity_structure(opts);
  CHECK_FALSE(bad.pass);
  opts.fault = verification::Fault::none;
  const auto good = verification::criterion_cavity_structure(opts);
  CHECK(good.pass);
}
