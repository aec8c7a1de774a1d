#include "qkp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "qkp/csv_io.hpp"
#include "qkp/kron_init.hpp"
#include "qkp/rng.hpp"

namespace qkp {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string fit_config_ini(std::string_view prefix, const FitConfig& c, bool qkp) {
  std::string out;
  if (qkp) {
    out += fmt::format("{}-eps1={}\n{}-eps2={}\n", prefix, format_double(c.eps1), prefix,
                       format_double(c.eps2));
  } else {
    out += fmt::format("{}-eps={}\n", prefix, format_double(c.eps));
  }
  return out;
}

}  // namespace

FitConfig ExperimentConfig::fit_config(Algorithm a) const {
  const FitConfig rates = default_fit_config(a, shape, magnitude_floor);
  FitConfig c = fit;
  c.eps = rates.eps;
  c.eps1 = rates.eps1;
  c.eps2 = rates.eps2;
  if (a == Algorithm::S1 && s1_eps) c.eps = *s1_eps;
  if (a == Algorithm::S2 && s2_eps) c.eps = *s2_eps;
  if (qkp_eps1) c.eps1 = *qkp_eps1;
  if (qkp_eps2) c.eps2 = *qkp_eps2;
  return c;
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw std::invalid_argument("experiment: trials must be >= 1");
  if (n < 1) throw std::invalid_argument("experiment: N must be >= 1");
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("experiment: fraction must lie in [0, 1]");
  }
  if (estimators.empty()) throw std::invalid_argument("experiment: no estimators selected");
  if (!(support_tau >= 0.0)) throw std::invalid_argument("experiment: support tau must be >= 0");
  if (init_eps && !(*init_eps > 0.0)) throw std::invalid_argument("experiment: init eps must be > 0");
  if (!(magnitude_floor > 0.0)) throw std::invalid_argument("experiment: floor must be > 0");
  for (Algorithm a : estimators) fit_config(a).validate();
}

std::string ExperimentConfig::to_ini() const {
  std::string algos;
  for (Algorithm a : estimators) {
    if (!algos.empty()) algos += ',';
    algos += lower(to_string(a));
  }
  // Solver settings are shared by the three estimators.
  const SolverOptions& so = fit.solver;
  std::string out = "[experiment]\n";
  out += fmt::format("m1={}\nm2={}\ntrials={}\nn={}\nfraction={}\nseed={}\n", shape.m1,
                     shape.m2, trials, n, format_double(fraction), master_seed);
  out += fmt::format("estimators={}\njobs={}\ntau={}\n", algos, parallelism,
                     format_double(support_tau));
  if (init_eps) out += fmt::format("init-eps={}\n", format_double(*init_eps));
  out += fmt::format("floor={}\n", format_double(magnitude_floor));
  out += fit_config_ini("s1", fit_config(Algorithm::S1), false);
  out += fit_config_ini("s2", fit_config(Algorithm::S2), false);
  out += fit_config_ini("qkp", fit_config(Algorithm::Qkp), true);
  out += fmt::format("eps-stop={}\nmax-outer-iter={}\n", format_double(fit.eps_stop),
                     fit.max_outer_iter);
  out += fmt::format("kkt-tol={}\nmax-inner-iter={}\nrho-init={}\nwarm-start={}\n",
                     format_double(so.kkt_tol), so.max_inner_iter, format_double(so.rho_init),
                     so.warm_start ? "true" : "false");
  out += fmt::format("penalize-diagonal={}\n", so.penalize_diagonal ? "true" : "false");
  out += fmt::format("value-low={}\nvalue-high={}\nvalue-margin={}\n",
                     format_double(precision.low), format_double(precision.high),
                     format_double(precision.margin));
  out += fmt::format("# rng: {}\n", Rng::kAlgorithm);
  return out;
}

QuantileSummary quantile_summary(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("quantile_summary: no values");
  std::sort(values.begin(), values.end());
  const auto q = [&](double p) {
    const double h = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  return {values.front(), q(0.25), q(0.5), q(0.75), values.back()};
}

int ExperimentSummary::failed_trials() const {
  return static_cast<int>(std::count_if(trials.begin(), trials.end(),
                                        [](const TrialResult& t) { return !t.ok; }));
}

std::vector<double> ExperimentSummary::values(Algorithm a, Metric metric) const {
  std::vector<double> out;
  for (const TrialResult& t : trials) {
    if (!t.ok) continue;
    for (const EstimatorRun& r : t.runs) {
      if (r.errors.estimator != a) continue;
      out.push_back(metric == Metric::RelativeError ? r.errors.e_rel : r.errors.e_sp);
    }
  }
  return out;
}

QuantileSummary ExperimentSummary::stats(Algorithm a, Metric metric) const {
  return quantile_summary(values(a, metric));
}

Index ExperimentSummary::hyperparameter_count(Algorithm a) const {
  return qkp::hyperparameter_count(a, config.shape);
}

TrialResult run_trial(const ExperimentConfig& config, int trial) {
  const auto t0 = std::chrono::steady_clock::now();
  TrialResult out;
  out.trial = trial;
  out.seed = derive_seed(config.master_seed, static_cast<std::uint64_t>(trial));
  try {
    const Trial data = generate_trial(config.shape, config.fraction, config.n, out.seed,
                                      config.precision);
    out.true_support = data.model.support;
    const double n = static_cast<double>(config.n);
    for (Algorithm algo : config.estimators) {
      const auto t_fit = std::chrono::steady_clock::now();
      const HyperParams init = algo == Algorithm::Qkp
                                   ? init_hyperparams(data.sigma, config.shape, config.init_eps).hyper()
                                   : HyperParams::ones(algo, config.shape);
      FitReport rep = fit(data.sigma, n, algo, init, config.fit_config(algo));
      TrialErrors err = evaluate_estimate(algo, data.model.s_true, data.model.support,
                                          rep.s_hat, config.support_tau);
      SupportMatrix support = extract_support(rep.s_hat, config.support_tau);
      out.runs.push_back(EstimatorRun{err, rep.s_hat, std::move(support), rep.outer_iterations,
                                      rep.inner_iterations, rep.termination,
                                      rep.all_solves_converged, seconds_since(t_fit)});
    }
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
    out.runs.clear();
  }
  out.seconds = seconds_since(t0);
  return out;
}

ExperimentSummary run_experiment(const ExperimentConfig& config,
                                 const TrialCallback& on_trial_done) {
  config.validate();
  ExperimentSummary summary{config, {}};
  summary.trials.resize(static_cast<std::size_t>(config.trials));

  unsigned workers = config.parallelism;
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(config.trials));

  std::atomic<int> next{0};
  std::mutex report_mutex;
  const auto work = [&] {
    for (int t = next++; t < config.trials; t = next++) {
      TrialResult r = run_trial(config, t);
      std::lock_guard lock(report_mutex);
      summary.trials[static_cast<std::size_t>(t)] = std::move(r);
      if (on_trial_done) on_trial_done(summary.trials[static_cast<std::size_t>(t)]);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return summary;
}

std::string errors_csv(const ExperimentSummary& summary) {
  std::string out =
      "trial,estimator,e_rel,e_sp,iterations,termination,mismatch_fraction,"
      "true_pos,false_pos,false_neg\n";
  for (const TrialResult& t : summary.trials) {
    if (!t.ok) continue;
    for (const EstimatorRun& r : t.runs) {
      out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", t.trial, to_string(r.errors.estimator),
                         format_double(r.errors.e_rel), format_double(r.errors.e_sp),
                         r.outer_iterations, to_string(r.termination),
                         format_double(r.errors.mismatch), r.errors.counts.true_positives,
                         r.errors.counts.false_positives, r.errors.counts.false_negatives);
    }
  }
  return out;
}

std::string boxplot_csv(const ExperimentSummary& summary) {
  std::string out = "estimator,metric,min,q1,median,q3,max\n";
  for (Algorithm a : summary.config.estimators) {
    for (Metric metric : {Metric::SparsityError, Metric::RelativeError}) {
      const auto v = summary.values(a, metric);
      if (v.empty()) continue;
      const QuantileSummary q = quantile_summary(v);
      out += fmt::format("{},{},{},{},{},{},{}\n", to_string(a),
                         metric == Metric::SparsityError ? "e_sp" : "e_rel", format_double(q.min),
                         format_double(q.q1), format_double(q.median), format_double(q.q3),
                         format_double(q.max));
    }
  }
  return out;
}

std::string render_supports(const std::vector<std::pair<std::string, SupportMatrix>>& panels,
                            const KroneckerShape& shape) {
  const Index m = shape.dim();
  const Index width = m + (shape.m1 - 1);  // one '|' between modules
  std::string out;
  for (std::size_t p = 0; p < panels.size(); ++p) {
    if (p) out += "   ";
    std::string title = panels[p].first.substr(0, static_cast<std::size_t>(width));
    out += title + std::string(static_cast<std::size_t>(width) - title.size(), ' ');
  }
  out += '\n';
  for (Index r = 0; r < m; ++r) {
    if (r > 0 && r % shape.m2 == 0) {
      for (std::size_t p = 0; p < panels.size(); ++p) {
        if (p) out += "   ";
        for (Index c = 0; c < m; ++c) {
          if (c > 0 && c % shape.m2 == 0) out += '+';
          out += '-';
        }
      }
      out += '\n';
    }
    for (std::size_t p = 0; p < panels.size(); ++p) {
      if (p) out += "   ";
      for (Index c = 0; c < m; ++c) {
        if (c > 0 && c % shape.m2 == 0) out += '|';
        out += panels[p].second(r, c) ? '#' : '.';
      }
    }
    out += '\n';
  }
  return out;
}

void emit_outputs(const ExperimentSummary& summary, const std::filesystem::path& dir) {
  bool any_result = false;
  for (const TrialResult& t : summary.trials) any_result = any_result || (t.ok && !t.runs.empty());
  if (!any_result) throw std::runtime_error("emit_outputs: no estimator results to write");

  std::filesystem::create_directories(dir);
  const ExperimentConfig& cfg = summary.config;
  write_text_file(dir / "config.ini", cfg.to_ini());
  write_text_file(dir / "errors.csv", errors_csv(summary));
  write_text_file(dir / "boxplot.csv", boxplot_csv(summary));

  std::string timing = "trial,estimator,seconds\n";
  std::string failures = "trial,seed,error\n";
  for (const TrialResult& t : summary.trials) {
    if (!t.ok) {
      std::string msg = t.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      failures += fmt::format("{},{},{}\n", t.trial, t.seed, msg);
      continue;
    }
    for (const EstimatorRun& r : t.runs) {
      timing += fmt::format("{},{},{:.6f}\n", t.trial, to_string(r.errors.estimator), r.seconds);
    }
  }
  write_text_file(dir / "timing.csv", timing);
  if (summary.failed_trials() > 0) write_text_file(dir / "failures.csv", failures);

  std::string hyper = "estimator,hyperparameters\n";
  std::string text = fmt::format("shape {}x{} (m={}), trials={}, N={}, fraction={}, seed={}\n",
                                 cfg.shape.m1, cfg.shape.m2, cfg.shape.dim(), cfg.trials, cfg.n,
                                 format_double(cfg.fraction), cfg.master_seed);
  text += fmt::format("failed trials: {}\n\n", summary.failed_trials());
  text += fmt::format("{:<10}{:>16}{:>14}{:>14}\n", "estimator", "hyperparameters",
                      "median e_sp", "median e_rel");
  for (Algorithm a : cfg.estimators) {
    hyper += fmt::format("{},{}\n", to_string(a), summary.hyperparameter_count(a));
    const auto sp = summary.values(a, Metric::SparsityError);
    const auto rel = summary.values(a, Metric::RelativeError);
    text += fmt::format("{:<10}{:>16}{:>14.6g}{:>14.6g}\n", to_string(a),
                        summary.hyperparameter_count(a),
                        sp.empty() ? NAN : quantile_summary(sp).median,
                        rel.empty() ? NAN : quantile_summary(rel).median);
  }
  write_text_file(dir / "hyperparams.csv", hyper);
  write_text_file(dir / "summary.txt", text);

  if (cfg.write_grids) {
    const auto grid_dir = dir / "supports";
    std::filesystem::create_directories(grid_dir);
    for (const TrialResult& t : summary.trials) {
      if (!t.ok || !t.true_support) continue;
      const std::string stem = fmt::format("trial_{:03d}", t.trial);
      std::vector<std::pair<std::string, SupportMatrix>> panels{{"true", *t.true_support}};
      write_matrix_csv(grid_dir / (stem + "_true.csv"), t.true_support->matrix());
      for (const EstimatorRun& r : t.runs) {
        const std::string name = lower(to_string(r.errors.estimator));
        write_matrix_csv(grid_dir / (stem + "_" + name + ".csv"), r.support.matrix());
        panels.emplace_back(std::string(to_string(r.errors.estimator)), r.support);
      }
      write_text_file(grid_dir / (stem + ".txt"), render_supports(panels, cfg.shape));
    }
  }
}

}  // namespace qkp
