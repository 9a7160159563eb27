#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spikedwigner/correction.hpp"
#include "spikedwigner/detection.hpp"
#include "spikedwigner/prior.hpp"
#include "spikedwigner/rs_solver.hpp"

namespace spikedwigner {

/// %.17g formatting: values round-trip exactly, so identical runs produce
/// byte-identical files.
inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct LambdaGrid {
  double min = 0.0, max = 1.0;
  int steps = 1;  // number of rows; steps = 1 emits min only
  double at(int i) const { return steps <= 1 ? min : min + (max - min) * i / (steps - 1); }
};

struct RsCurveRow {
  double lambda, qstar, phi_rs, mmse;
  bool near_degenerate;
};

inline std::vector<RsCurveRow> rs_curve(const Prior& prior, const QuadratureRule& quad,
                                        const LambdaGrid& grid) {
  const double m2 = moments(prior).m2;
  std::vector<RsCurveRow> rows;
  for (int i = 0; i < grid.steps; ++i) {
    const double lam = grid.at(i);
    const RsSolution sol = solve_qstar(lam, prior, quad);
    rows.push_back({lam, sol.qstar, sol.phi_rs, m2 - sol.qstar, sol.near_degenerate});
  }
  return rows;
}

struct CorrectionCurveRow {
  double lambda, mu1, mu2, psi_rs, delta_rs_t1, kl_formula;
  bool near_degenerate;
  bool valid;
};

inline std::vector<CorrectionCurveRow> correction_curve(const Prior& prior,
                                                        const QuadratureRule& quad,
                                                        const LambdaGrid& grid) {
  std::vector<CorrectionCurveRow> rows;
  for (int i = 0; i < grid.steps; ++i) {
    const double lam = grid.at(i);
    const CorrectionBundle b = correction_bundle(lam, prior, quad);
    CorrectionCurveRow row{};
    row.lambda = lam;
    row.mu1 = b.mu1;
    row.mu2 = b.mu2;
    row.near_degenerate = b.near_degenerate;
    row.valid = b.valid;
    row.psi_rs = b.valid ? *b.psi_rs : std::nan("");
    row.delta_rs_t1 = b.valid ? delta_rs(lam, 1.0, b) : std::nan("");
    row.kl_formula = lam < 1.0 ? clt_params(lam).mu : std::nan("");
    rows.push_back(row);
  }
  return rows;
}

struct DetectCurveRow {
  double lambda, err_star, tv, type1, type2;
};

inline std::vector<DetectCurveRow> detect_curve(const LambdaGrid& grid) {
  std::vector<DetectCurveRow> rows;
  for (int i = 0; i < grid.steps; ++i) {
    const double lam = grid.at(i);
    const DetectionFormulasResult f = detection_formulas(lam);
    rows.push_back({lam, f.err_star, f.tv, f.type1, f.type2});
  }
  return rows;
}

// --- writers ---------------------------------------------------------------

inline void write_csv(const std::vector<RsCurveRow>& rows, std::ostream& os) {
  os << "lambda,qstar,phi_rs,mmse,near_degenerate\n";
  for (const auto& r : rows)
    os << fmt_g17(r.lambda) << ',' << fmt_g17(r.qstar) << ',' << fmt_g17(r.phi_rs) << ','
       << fmt_g17(r.mmse) << ',' << (r.near_degenerate ? 1 : 0) << '\n';
}

inline void write_csv(const std::vector<CorrectionCurveRow>& rows, std::ostream& os) {
  os << "lambda,mu1,mu2,psi_rs,delta_rs@t=1,kl_formula,near_degenerate\n";
  for (const auto& r : rows)
    os << fmt_g17(r.lambda) << ',' << fmt_g17(r.mu1) << ',' << fmt_g17(r.mu2) << ','
       << fmt_g17(r.psi_rs) << ',' << fmt_g17(r.delta_rs_t1) << ',' << fmt_g17(r.kl_formula)
       << ',' << (r.near_degenerate ? 1 : 0) << '\n';
}

inline void write_csv(const std::vector<DetectCurveRow>& rows, std::ostream& os) {
  os << "lambda,err_star,tv,type1,type2\n";
  for (const auto& r : rows)
    os << fmt_g17(r.lambda) << ',' << fmt_g17(r.err_star) << ',' << fmt_g17(r.tv) << ','
       << fmt_g17(r.type1) << ',' << fmt_g17(r.type2) << '\n';
}

inline nlohmann::json to_json(const std::vector<RsCurveRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows)
    arr.push_back({{"lambda", r.lambda},
                   {"qstar", r.qstar},
                   {"phi_rs", r.phi_rs},
                   {"mmse", r.mmse},
                   {"near_degenerate", r.near_degenerate}});
  return arr;
}

inline nlohmann::json to_json(const std::vector<CorrectionCurveRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row = {{"lambda", r.lambda},  {"mu1", r.mu1},
                          {"mu2", r.mu2},        {"near_degenerate", r.near_degenerate},
                          {"valid", r.valid}};
    if (r.valid) {
      row["psi_rs"] = r.psi_rs;
      row["delta_rs@t=1"] = r.delta_rs_t1;
    }
    if (!std::isnan(r.kl_formula)) row["kl_formula"] = r.kl_formula;
    arr.push_back(row);
  }
  return arr;
}

inline nlohmann::json to_json(const std::vector<DetectCurveRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows)
    arr.push_back({{"lambda", r.lambda},
                   {"err_star", r.err_star},
                   {"tv", r.tv},
                   {"type1", r.type1},
                   {"type2", r.type2}});
  return arr;
}

inline nlohmann::json to_json(const DetectionReport& rep) {
  nlohmann::json moments = nlohmann::json::array();
  for (const auto& row : rep.moment_table)
    moments.push_back({{"k", row.k},
                       {"empirical", row.empirical},
                       {"target", row.target},
                       {"gap", row.gap},
                       {"bootstrap_se", row.bootstrap_se}});
  return nlohmann::json{{"n", rep.n},
                        {"lambda", rep.lambda},
                        {"prior", rep.prior_tag},
                        {"seed", rep.seed},
                        {"samples_planted", rep.samples_planted},
                        {"samples_null", rep.samples_null},
                        {"kl_hat", rep.kl_hat},
                        {"kl_stderr", rep.kl_stderr},
                        {"mean_hat", rep.mean_hat},
                        {"var_hat", rep.var_hat},
                        {"ks_distance", rep.ks_distance},
                        {"null_mean_hat", rep.null_mean_hat},
                        {"null_var_hat", rep.null_var_hat},
                        {"null_ks_distance", rep.null_ks_distance},
                        {"predicted", {{"mu", rep.predicted.mu}, {"sigma2", rep.predicted.sigma2}}},
                        {"type1_hat", rep.type1_hat},
                        {"type2_hat", rep.type2_hat},
                        {"err_hat", rep.err_hat},
                        {"tv_hat", rep.tv_hat},
                        {"type1_stderr", rep.type1_stderr},
                        {"type2_stderr", rep.type2_stderr},
                        {"err_stderr", rep.err_stderr},
                        {"moment_table", moments},
                        {"conjecture_flag", rep.conjecture_flag}};
}

/// CSV export of raw samples: (sample_index, log_l, model).
inline void write_samples_csv(const LlrSample& planted, const LlrSample& null_samples,
                              std::ostream& os) {
  os << "sample_index,log_l,model\n";
  for (size_t i = 0; i < planted.values.size(); ++i)
    os << i << ',' << fmt_g17(planted.values[i]) << ",planted\n";
  for (size_t i = 0; i < null_samples.values.size(); ++i)
    os << i << ',' << fmt_g17(null_samples.values[i]) << ",null\n";
}

}  // namespace spikedwigner
