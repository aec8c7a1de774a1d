// qkp-glasso: generate QKP trial suites, fit the S1 / S2 / QKP estimators and
// run the Monte Carlo comparison.
//
// Exit codes: 0 success, 1 usage error, 2 numerical (or other) failure,
// 3 some experiment trials failed.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "qkp/csv_io.hpp"
#include "qkp/estimators.hpp"
#include "qkp/harness.hpp"
#include "qkp/kron_init.hpp"
#include "qkp/metrics.hpp"
#include "qkp/rng.hpp"
#include "qkp/synth.hpp"

namespace fs = std::filesystem;
using namespace qkp;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitPartial = 3;

struct SharedFitFlags {
  double eps_stop = 1e-4;
  int max_outer_iter = 200;
  double kkt_tol = -1.0;
  int max_inner_iter = 5000;
  double rho_init = 1.0;
  bool warm_start = true;
  bool penalize_diagonal = true;

  void add(CLI::App* app) {
    app->add_option("--eps-stop", eps_stop, "Outer stopping threshold on ||S_h - S_h-1||_F")
        ->capture_default_str();
    app->add_option("--max-outer-iter", max_outer_iter)->capture_default_str();
    app->add_option("--kkt-tol", kkt_tol, "Inner KKT tolerance (<= 0: 1e-6 * N)")
        ->capture_default_str();
    app->add_option("--max-inner-iter", max_inner_iter)->capture_default_str();
    app->add_option("--rho-init", rho_init)->capture_default_str();
    app->add_option("--warm-start", warm_start)->capture_default_str();
    app->add_option("--penalize-diagonal", penalize_diagonal)->capture_default_str();
  }

  void apply(FitConfig& c) const {
    c.eps_stop = eps_stop;
    c.max_outer_iter = max_outer_iter;
    c.solver.kkt_tol = kkt_tol;
    c.solver.max_inner_iter = max_inner_iter;
    c.solver.rho_init = rho_init;
    c.solver.warm_start = warm_start;
    c.solver.penalize_diagonal = penalize_diagonal;
  }
};

std::string trace_csv(const FitReport& rep) {
  std::string out = "iteration,objective,step_norm,kkt_residual\n";
  out += fmt::format("0,{},,\n", format_double(rep.objective_trace.front()));
  for (std::size_t h = 0; h < rep.step_norms.size(); ++h) {
    out += fmt::format("{},{},{},{}\n", h + 1, format_double(rep.objective_trace[h + 1]),
                       format_double(rep.step_norms[h]), format_double(rep.kkt_residuals[h]));
  }
  return out;
}

void write_hyper(const HyperParams& hyper, const fs::path& dir) {
  std::visit(
      [&](const auto& h) {
        using T = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<T, ScalarHyper>) {
          write_text_file(dir / "gamma.csv", format_double(h.gamma) + "\n");
        } else if constexpr (std::is_same_v<T, FullHyper>) {
          write_matrix_csv(dir / "gamma.csv", h.gamma);
        } else {
          write_matrix_csv(dir / "lambda.csv", h.lambda);
          write_matrix_csv(dir / "gamma.csv", h.gamma);
        }
      },
      hyper.value());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse QKP graphical model estimation (S1 / S2 / QKP estimators)"};
  app.set_config("--config", "", "INI/TOML file with option values; flags override it");
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a suite of simulated QKP trials to disk");
  Index g_m1 = 6, g_m2 = 10, g_n = 1000;
  int g_trials = 60;
  double g_fraction = 0.2;
  std::uint64_t g_seed = 42;
  std::string g_out;
  PrecisionOptions g_precision;
  gen->add_option("--m1", g_m1, "Number of modules")->capture_default_str();
  gen->add_option("--m2", g_m2, "Nodes per module")->capture_default_str();
  gen->add_option("--trials", g_trials)->capture_default_str();
  gen->add_option("--n", g_n, "Samples per trial")->capture_default_str();
  gen->add_option("--fraction", g_fraction, "Edge fraction of both factor graphs")
      ->capture_default_str();
  gen->add_option("--seed", g_seed, "Master seed")->capture_default_str();
  gen->add_option("--value-low", g_precision.low)->capture_default_str();
  gen->add_option("--value-high", g_precision.high)->capture_default_str();
  gen->add_option("--value-margin", g_precision.margin)->capture_default_str();
  gen->add_option("--out", g_out, "Output directory")->required();

  // fit
  auto* fitc = app.add_subcommand("fit", "Fit one estimator to a sample covariance");
  std::string f_sigma, f_algo = "qkp", f_out, f_init = "auto";
  double f_n = 0;
  Index f_m1 = 0, f_m2 = 0;
  double f_floor = kDefaultMagnitudeFloor, f_tau = 1e-6;
  std::optional<double> f_eps, f_eps1, f_eps2;
  std::optional<double> f_init_eps;
  SharedFitFlags f_shared;
  fitc->add_option("--sigma", f_sigma, "Sample covariance CSV")->required()->check(CLI::ExistingFile);
  fitc->add_option("--n", f_n, "Number of samples behind Sigma")->required();
  fitc->add_option("--algo", f_algo, "s1, s2 or qkp")->capture_default_str();
  fitc->add_option("--m1", f_m1, "Number of modules (qkp)");
  fitc->add_option("--m2", f_m2, "Nodes per module (qkp)");
  fitc->add_option("--floor", f_floor, "Per-entry magnitude floor behind the default rates")
      ->capture_default_str();
  fitc->add_option("--eps", f_eps, "Override the s1/s2 hyperprior rate");
  fitc->add_option("--eps1", f_eps1, "Override the Lambda rate (qkp)");
  fitc->add_option("--eps2", f_eps2, "Override the Gamma rate (qkp)");
  fitc->add_option("--init", f_init, "auto (qkp: kron, s1/s2: ones), kron or ones")
      ->capture_default_str();
  fitc->add_option("--init-eps", f_init_eps, "Offset for the kron initialization");
  fitc->add_option("--tau", f_tau, "Relative support threshold")->capture_default_str();
  fitc->add_option("--out", f_out, "Output directory")->required();
  f_shared.add(fitc);

  // experiment
  auto* exp = app.add_subcommand("experiment", "Monte Carlo comparison of S1, S2 and QKP");
  ExperimentConfig ec;
  std::vector<std::string> e_estimators{"s1", "s2", "qkp"};
  std::string e_out;
  SharedFitFlags e_shared;
  std::optional<double> e_init_eps;
  bool e_no_grids = false, e_quiet = false;
  exp->add_option("--m1", ec.shape.m1, "Number of modules")->capture_default_str();
  exp->add_option("--m2", ec.shape.m2, "Nodes per module")->capture_default_str();
  exp->add_option("--trials", ec.trials)->capture_default_str();
  exp->add_option("--n", ec.n, "Samples per trial")->capture_default_str();
  exp->add_option("--fraction", ec.fraction)->capture_default_str();
  exp->add_option("--seed", ec.master_seed, "Master seed")->capture_default_str();
  exp->add_option("--estimators", e_estimators, "Subset of s1,s2,qkp")->delimiter(',')
      ->capture_default_str();
  exp->add_option("--jobs", ec.parallelism, "Worker threads (0: all cores)")->capture_default_str();
  exp->add_option("--tau", ec.support_tau, "Relative support threshold")->capture_default_str();
  exp->add_option("--init-eps", e_init_eps, "Offset for the QKP initialization");
  exp->add_option("--floor", ec.magnitude_floor,
                  "Per-entry magnitude floor behind the default hyperprior rates")
      ->capture_default_str();
  exp->add_option("--s1-eps", ec.s1_eps, "Override the S1 rate");
  exp->add_option("--s2-eps", ec.s2_eps, "Override the S2 rate");
  exp->add_option("--qkp-eps1", ec.qkp_eps1, "Override the QKP Lambda rate");
  exp->add_option("--qkp-eps2", ec.qkp_eps2, "Override the QKP Gamma rate");
  exp->add_option("--value-low", ec.precision.low)->capture_default_str();
  exp->add_option("--value-high", ec.precision.high)->capture_default_str();
  exp->add_option("--value-margin", ec.precision.margin)->capture_default_str();
  exp->add_flag("--no-grids", e_no_grids, "Skip per-trial support grids");
  exp->add_flag("--quiet", e_quiet, "No per-trial progress lines");
  exp->add_option("--out", e_out, "Output directory")->required();
  e_shared.add(exp);

  // metrics
  auto* met = app.add_subcommand("metrics", "Compare an estimate against the truth");
  std::string m_true, m_est;
  double m_tau = 1e-6;
  bool m_supports = false;
  met->add_option("--true", m_true, "True concentration matrix (or support) CSV")
      ->required()->check(CLI::ExistingFile);
  met->add_option("--est", m_est, "Estimated concentration matrix (or support) CSV")
      ->required()->check(CLI::ExistingFile);
  met->add_option("--tau", m_tau, "Relative support threshold")->capture_default_str();
  met->add_flag("--supports", m_supports, "Inputs are 0/1 supports; only e_sp is reported");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen) {
      const KroneckerShape shape(g_m1, g_m2);
      if (g_trials < 1) throw std::invalid_argument("--trials must be >= 1");
      const fs::path out(g_out);
      fs::create_directories(out);
      for (int t = 0; t < g_trials; ++t) {
        const auto seed = derive_seed(g_seed, static_cast<std::uint64_t>(t));
        write_trial(generate_trial(shape, g_fraction, g_n, seed, g_precision),
                    out / fmt::format("trial_{:03d}", t));
      }
      write_text_file(out / "suite.txt",
                      fmt::format("m1={}\nm2={}\ntrials={}\nN={}\nfraction={}\nseed={}\nrng={}\n"
                                  "trial_seed=derive_seed(seed, trial)\n",
                                  g_m1, g_m2, g_trials, g_n, format_double(g_fraction), g_seed,
                                  Rng::kAlgorithm));
      fmt::print("wrote {} trials to {}\n", g_trials, out.string());
      return 0;
    }

    if (*fitc) {
      const SymMatrix sigma(read_matrix_csv(f_sigma));
      const Algorithm algo = parse_algorithm(f_algo);
      KroneckerShape shape(1, sigma.dim());
      if (f_m1 > 0 || f_m2 > 0) {
        shape = KroneckerShape(f_m1 > 0 ? f_m1 : sigma.dim() / std::max<Index>(f_m2, 1),
                               f_m2 > 0 ? f_m2 : sigma.dim() / std::max<Index>(f_m1, 1));
      } else if (algo == Algorithm::Qkp) {
        throw std::invalid_argument("fit --algo qkp needs --m1 and --m2");
      }
      if (shape.dim() != sigma.dim()) {
        throw std::invalid_argument(fmt::format("m1 * m2 = {} does not match Sigma dimension {}",
                                                shape.dim(), sigma.dim()));
      }
      FitConfig cfg = default_fit_config(algo, shape, f_floor);
      if (f_eps) cfg.eps = *f_eps;
      if (f_eps1) cfg.eps1 = *f_eps1;
      if (f_eps2) cfg.eps2 = *f_eps2;
      f_shared.apply(cfg);

      const bool use_kron = f_init == "kron" || (f_init == "auto" && algo == Algorithm::Qkp);
      if (f_init != "auto" && f_init != "kron" && f_init != "ones") {
        throw std::invalid_argument("--init must be auto, kron or ones");
      }
      if (use_kron && algo != Algorithm::Qkp) {
        throw std::invalid_argument("--init kron applies to qkp only");
      }
      const HyperParams init = use_kron ? init_hyperparams(sigma, shape, f_init_eps).hyper()
                                        : HyperParams::ones(algo, shape);
      const FitReport rep = fit(sigma, f_n, algo, init, cfg);

      const fs::path out(f_out);
      fs::create_directories(out);
      write_matrix_csv(out / "S_hat.csv", rep.s_hat.matrix());
      write_matrix_csv(out / "support.csv", extract_support(rep.s_hat, f_tau).matrix());
      write_hyper(rep.hyper_final, out);
      write_text_file(out / "trace.csv", trace_csv(rep));
      const std::string report = fmt::format(
          "algorithm={}\nN={}\nm1={}\nm2={}\nouter_iterations={}\ninner_iterations={}\n"
          "termination={}\nall_solves_converged={}\nobjective={}\nhyperparameters={}\n",
          to_string(algo), format_double(f_n), shape.m1, shape.m2, rep.outer_iterations,
          rep.inner_iterations, to_string(rep.termination), rep.all_solves_converged,
          format_double(rep.objective_trace.back()), rep.hyper_final.free_count());
      write_text_file(out / "report.txt", report);
      std::cout << report;
      return 0;
    }

    if (*exp) {
      ec.estimators.clear();
      for (const auto& name : e_estimators) ec.estimators.push_back(parse_algorithm(name));
      e_shared.apply(ec.fit);
      ec.init_eps = e_init_eps;
      ec.write_grids = !e_no_grids;
      ec.validate();

      const ExperimentSummary summary = run_experiment(ec, [&](const TrialResult& t) {
        if (e_quiet) return;
        if (!t.ok) {
          fmt::print(stderr, "trial {:3d}: FAILED ({})\n", t.trial, t.error);
          return;
        }
        std::string line = fmt::format("trial {:3d}:", t.trial);
        for (const EstimatorRun& r : t.runs) {
          line += fmt::format("  {} e_sp={:.3e} e_rel={:.3f} it={}", to_string(r.errors.estimator),
                              r.errors.e_sp, r.errors.e_rel, r.outer_iterations);
        }
        fmt::print(stderr, "{}  ({:.1f}s)\n", line, t.seconds);
      });
      emit_outputs(summary, e_out);
      std::cout << read_text_file(fs::path(e_out) / "summary.txt");
      return summary.failed_trials() > 0 ? kExitPartial : 0;
    }

    if (*met) {
      const Matrix a = read_matrix_csv(m_true);
      const Matrix b = read_matrix_csv(m_est);
      if (m_supports) {
        const SupportMatrix ea(a), eb(b);
        const EdgeCounts c = edge_counts(ea, eb);
        fmt::print("e_sp={}\nmismatch_fraction={}\ntrue_pos={}\nfalse_pos={}\nfalse_neg={}\n",
                   format_double(sparsity_error(ea, eb)), format_double(mismatch_fraction(ea, eb)),
                   c.true_positives, c.false_positives, c.false_negatives);
      } else {
        const SymMatrix sa(a), sb(b);
        const SupportMatrix ea = extract_support(sa, m_tau), eb = extract_support(sb, m_tau);
        const EdgeCounts c = edge_counts(ea, eb);
        fmt::print("e_rel={}\ne_sp={}\nmismatch_fraction={}\ntrue_pos={}\nfalse_pos={}\nfalse_neg={}\n",
                   format_double(relative_error(sa, sb)), format_double(sparsity_error(ea, eb)),
                   format_double(mismatch_fraction(ea, eb)), c.true_positives, c.false_positives,
                   c.false_negatives);
      }
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitNumerical;
  }
  return kExitUsage;
}
