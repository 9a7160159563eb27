// Command-line front end: RS curves, finite-size corrections, detection
// error curves, exact-LLR simulation with detection reports, posterior
// overlap statistics, thresholds, and the verification suite.
//
// Every flag can also be set through an environment variable with the SW_
// prefix (e.g. SW_PRIOR, SW_SEED); see --help.
#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "spikedwigner/curves.hpp"
#include "spikedwigner/mcmc.hpp"
#include "spikedwigner/pipeline.hpp"
#include "spikedwigner/verification.hpp"

using namespace spikedwigner;

namespace {

struct CommonArgs {
  std::string prior_spec = "rademacher";
  double lambda = 0.5;
  double lambda_min = 0.0, lambda_max = 1.0;
  int steps = 21;
  int n = 16;
  size_t samples = 1000;
  uint64_t seed = 1;
  double t = 1.0;
  int quad_order = 100;
  unsigned threads = 0;
  std::string out;
  std::string format = "csv";
};

std::ostream& open_output(const std::string& path, std::ofstream& file) {
  if (path.empty()) return std::cout;
  file.open(path);
  if (!file) throw CLI::RuntimeError("cannot open output file: " + path, 2);
  return file;
}

template <class Rows>
void emit(const Rows& rows, const CommonArgs& args) {
  std::ofstream file;
  std::ostream& os = open_output(args.out, file);
  if (args.format == "json")
    os << to_json(rows).dump(2) << '\n';
  else
    write_csv(rows, os);
}

void add_grid_flags(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--lambda-min", a.lambda_min, "grid start")->envname("SW_LAMBDA_MIN");
  cmd->add_option("--lambda-max", a.lambda_max, "grid end")->envname("SW_LAMBDA_MAX");
  cmd->add_option("--steps", a.steps, "grid rows (>= 1)")
      ->check(CLI::PositiveNumber)
      ->envname("SW_STEPS");
}

void add_io_flags(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--out", a.out, "output path (default stdout)")->envname("SW_OUT");
  cmd->add_option("--format", a.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->envname("SW_FORMAT");
  cmd->add_option("--quad-order", a.quad_order, "Gauss-Hermite order (default 100)")
      ->check(CLI::PositiveNumber)
      ->envname("SW_QUAD_ORDER");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "spikedwigner: replica-symmetric theory of the rank-one spiked Wigner model,\n"
      "cross-verified against exact small-N computation and Monte Carlo.\n"
      "Environment overrides: every flag maps to SW_<FLAG> (upper case, dashes to\n"
      "underscores)."};
  app.require_subcommand(1);
  CommonArgs a;

  // rs-curve
  auto* rs = app.add_subcommand("rs-curve", "q*(lambda), phi_RS, MMSE over a lambda grid");
  rs->add_option("--prior", a.prior_spec, "prior spec string")->envname("SW_PRIOR");
  add_grid_flags(rs, a);
  add_io_flags(rs, a);
  rs->callback([&] {
    const Prior prior = parse_prior_spec(a.prior_spec);
    const QuadratureRule quad = gauss_hermite(a.quad_order);
    emit(rs_curve(prior, quad, {a.lambda_min, a.lambda_max, a.steps}), a);
  });

  // correction-curve
  auto* cc = app.add_subcommand("correction-curve",
                                "mu1, mu2, psi_RS, Delta_RS(t=1) and the KL formula");
  cc->add_option("--prior", a.prior_spec, "prior spec string")->envname("SW_PRIOR");
  add_grid_flags(cc, a);
  add_io_flags(cc, a);
  cc->callback([&] {
    const Prior prior = parse_prior_spec(a.prior_spec);
    const QuadratureRule quad = gauss_hermite(a.quad_order);
    emit(correction_curve(prior, quad, {a.lambda_min, a.lambda_max, a.steps}), a);
  });

  // detect-curve
  auto* dc = app.add_subcommand("detect-curve",
                                "limiting err*, TV, Type-I/II of the likelihood-ratio test");
  add_grid_flags(dc, a);
  add_io_flags(dc, a);
  dc->callback([&] { emit(detect_curve({a.lambda_min, a.lambda_max, a.steps}), a); });

  // simulate
  auto* sim = app.add_subcommand(
      "simulate", "matched planted/null exact-LLR samples plus a detection report");
  sim->add_option("--prior", a.prior_spec, "prior spec string")->envname("SW_PRIOR");
  sim->add_option("--lambda", a.lambda, "SNR")->envname("SW_LAMBDA");
  sim->add_option("--n", a.n, "matrix size")->check(CLI::Range(2, 64))->envname("SW_N");
  sim->add_option("--samples", a.samples, "instances per model")->envname("SW_SAMPLES");
  sim->add_option("--seed", a.seed, "master seed")->envname("SW_SEED");
  sim->add_option("--threads", a.threads, "worker threads (0 = auto)")->envname("SW_THREADS");
  add_io_flags(sim, a);
  sim->callback([&] {
    SimulateConfig cfg;
    cfg.n = a.n;
    cfg.lambda = a.lambda;
    cfg.prior = parse_prior_spec(a.prior_spec);
    cfg.samples = a.samples;
    cfg.seed = a.seed;
    cfg.threads = a.threads;
    const LlrSample planted = generate_llr_samples(Model::planted, cfg);
    const LlrSample nulls = generate_llr_samples(Model::null_model, cfg);
    simulate_self_check(cfg, planted);  // throws (nonzero exit) on violation
    const QuadratureRule quad = gauss_hermite(a.quad_order);
    const ThresholdReport thr = lambda_c(cfg.prior, quad);
    const double lc = thr.non_centered ? 0.0 : thr.lambda_c;
    const DetectionReport rep = build_detection_report(planted, nulls, lc);
    if (a.out.empty()) {
      std::cout << to_json(rep).dump(2) << '\n';
    } else {
      std::ofstream jf(a.out + ".report.json");
      jf << to_json(rep).dump(2) << '\n';
      std::ofstream cf(a.out + ".samples.csv");
      write_samples_csv(planted, nulls, cf);
      std::cout << "wrote " << a.out << ".report.json and " << a.out << ".samples.csv\n";
    }
  });

  // overlap
  auto* ov = app.add_subcommand("overlap",
                                "posterior overlap statistics, exact enumeration or MCMC");
  bool force_mcmc = false;
  McmcConfig mcfg;
  double side_r = -1.0;
  ov->add_option("--prior", a.prior_spec, "prior spec string")->envname("SW_PRIOR");
  ov->add_option("--lambda", a.lambda, "SNR")->envname("SW_LAMBDA");
  ov->add_option("--n", a.n, "matrix size")->check(CLI::Range(2, 100000))->envname("SW_N");
  ov->add_option("--samples", a.samples, "instances to average over")->envname("SW_SAMPLES");
  ov->add_option("--seed", a.seed, "master seed")->envname("SW_SEED");
  ov->add_option("--t", a.t, "interpolation parameter in [0,1]")->envname("SW_T");
  ov->add_option("--side-r", side_r, "side-information SNR r (default lambda q*)")
      ->envname("SW_SIDE_R");
  ov->add_flag("--mcmc", force_mcmc, "force the MCMC sampler");
  ov->add_option("--sweeps", mcfg.sweeps, "MCMC sweeps (default 100 n)")->envname("SW_SWEEPS");
  ov->add_option("--burn-in", mcfg.burn_in, "MCMC burn-in sweeps (default 10 n)")
      ->envname("SW_BURN_IN");
  ov->add_option("--thinning", mcfg.thinning, "updates between measurements (default n)")
      ->envname("SW_THINNING");
  ov->add_option("--chains", mcfg.chains, "MCMC chains (>= 2)")->envname("SW_CHAINS");
  ov->add_option("--threads", a.threads, "worker threads (0 = auto)")->envname("SW_THREADS");
  add_io_flags(ov, a);
  ov->callback([&] {
    const Prior prior = parse_prior_spec(a.prior_spec);
    const QuadratureRule quad = gauss_hermite(a.quad_order);
    // the interpolated Gibbs measure at (lambda, t) observes the matrix
    // channel at SNR t*lambda and side information at (1-t) lambda q*
    const double lambda_matrix = a.t * a.lambda;
    mcfg.t = a.t;
    if (a.t < 1.0)
      mcfg.side_info_r =
          side_r >= 0.0 ? side_r : a.lambda * solve_qstar(a.lambda, prior, quad).qstar;
    const uint64_t configs =
        detail::checked_config_count(prior.atoms.size(), a.n, 1ull << 20);
    const bool use_mcmc = force_mcmc || configs > (1ull << 20);
    std::vector<OverlapStats> stats(a.samples);
    parallel_for(
        a.samples,
        [&](size_t s) {
          const Instance inst =
              sample_instance(a.n, lambda_matrix, prior, true, a.seed, s);
          stats[s] = use_mcmc ? mcmc_posterior(inst, prior, mcfg)
                              : posterior_pair_correlations(inst, prior);
        },
        a.threads);
    auto aggregate = [&](auto&& get) {
      double m = 0.0;
      for (const auto& st : stats) m += get(st);
      m /= stats.size();
      double var = 0.0;
      for (const auto& st : stats) var += (get(st) - m) * (get(st) - m);
      var = stats.size() > 1 ? var / (stats.size() - 1) : 0.0;
      return std::pair<double, double>(m, std::sqrt(var / stats.size()));
    };
    const auto r1s = aggregate([](const OverlapStats& s) { return s.mean_r1s; });
    const auto r1s_sq = aggregate([](const OverlapStats& s) { return s.mean_r1s_sq; });
    const auto abs_r1s = aggregate([](const OverlapStats& s) { return s.mean_abs_r1s; });
    const auto r12 = aggregate([](const OverlapStats& s) { return s.mean_r12; });
    const auto r12_sq = aggregate([](const OverlapStats& s) { return s.mean_r12_sq; });
    std::ofstream file;
    std::ostream& os = open_output(a.out, file);
    if (a.format == "json") {
      nlohmann::json j{{"estimator", use_mcmc ? "mcmc" : "exact_pair_correlations"},
                       {"n", a.n},
                       {"lambda", a.lambda},
                       {"t", a.t},
                       {"instances", a.samples},
                       {"mean_r1s", r1s.first},
                       {"se_r1s", r1s.second},
                       {"mean_r1s_sq", r1s_sq.first},
                       {"se_r1s_sq", r1s_sq.second},
                       {"mean_abs_r1s", abs_r1s.first},
                       {"se_abs_r1s", abs_r1s.second},
                       {"mean_r12", r12.first},
                       {"se_r12", r12.second},
                       {"mean_r12_sq", r12_sq.first},
                       {"se_r12_sq", r12_sq.second}};
      os << j.dump(2) << '\n';
    } else {
      os << "field,mean,stderr\n";
      os << "r1s," << fmt_g17(r1s.first) << ',' << fmt_g17(r1s.second) << '\n';
      os << "r1s_sq," << fmt_g17(r1s_sq.first) << ',' << fmt_g17(r1s_sq.second) << '\n';
      os << "abs_r1s," << fmt_g17(abs_r1s.first) << ',' << fmt_g17(abs_r1s.second) << '\n';
      os << "r12," << fmt_g17(r12.first) << ',' << fmt_g17(r12.second) << '\n';
      os << "r12_sq," << fmt_g17(r12_sq.first) << ',' << fmt_g17(r12_sq.second) << '\n';
    }
  });

  // thresholds
  auto* th = app.add_subcommand("thresholds",
                                "reconstruction threshold, spectral bound and rho*");
  bool with_rho_star = false;
  th->add_option("--prior", a.prior_spec, "prior spec string")->envname("SW_PRIOR");
  th->add_flag("--rho-star", with_rho_star, "also locate the sparse-family threshold rho*");
  add_io_flags(th, a);
  th->callback([&] {
    const Prior prior = parse_prior_spec(a.prior_spec);
    const QuadratureRule quad = gauss_hermite(a.quad_order);
    const ThresholdReport rep = lambda_c(prior, quad);
    nlohmann::json j{{"prior", prior.tag},
                     {"lambda_c", rep.lambda_c},
                     {"spectral_threshold", rep.spectral_threshold},
                     {"gap_flag", rep.gap_flag},
                     {"bracket_width", rep.bracket_width},
                     {"non_centered", rep.non_centered}};
    if (with_rho_star) j["rho_star"] = rho_star(quad);
    std::ofstream file;
    std::ostream& os = open_output(a.out, file);
    if (a.format == "json") {
      os << j.dump(2) << '\n';
    } else {
      os << "key,value\n";
      for (const auto& [k, v] : j.items())
        os << k << ',' << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
    }
  });

  // verify
  auto* vf = app.add_subcommand("verify", "run the acceptance criteria");
  bool quick = false;
  std::string fault_name;
  vf->add_flag("--quick", quick, "fast subset (completes in under a minute)");
  vf->add_option("--seed", a.seed, "master seed")->envname("SW_SEED");
  vf->add_option("--threads", a.threads, "worker threads (0 = auto)")->envname("SW_THREADS");
  vf->add_option("--inject-fault", fault_name, "test hook")->group("");  // hidden
  vf->callback([&] {
    verification::Options opts;
    opts.seed = a.seed;
    opts.threads = a.threads;
    if (fault_name == "mu2-sign") opts.fault = verification::Fault::mu2_sign;
    const auto results = verification::run(opts, quick, &std::cout);
    int failed = 0;
    for (const auto& r : results)
      if (!r.pass) ++failed;
    std::cout << results.size() << " criteria run, " << failed << " failed\n";
    if (failed > 0) throw CLI::RuntimeError("verification failed", 1);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
