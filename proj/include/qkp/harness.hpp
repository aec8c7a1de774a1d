#pragma once

// Monte Carlo comparison of the three estimators on generated QKP models.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qkp/estimators.hpp"
#include "qkp/metrics.hpp"
#include "qkp/synth.hpp"

namespace qkp {

struct ExperimentConfig {
  KroneckerShape shape{6, 10};
  int trials = 60;
  Index n = 1000;
  double fraction = 0.2;
  std::vector<Algorithm> estimators{Algorithm::S1, Algorithm::S2, Algorithm::Qkp};
  /// Stopping rule and solver settings shared by all estimators. Its rate
  /// fields are ignored; rates come from the floor and overrides below.
  FitConfig fit;
  double magnitude_floor = kDefaultMagnitudeFloor;
  std::optional<double> s1_eps;
  std::optional<double> s2_eps;
  std::optional<double> qkp_eps1;
  std::optional<double> qkp_eps2;
  std::uint64_t master_seed = 42;
  /// 0 selects std::thread::hardware_concurrency().
  unsigned parallelism = 0;
  double support_tau = 1e-6;
  /// Offset for the QKP initialization; unset selects the default rule.
  std::optional<double> init_eps;
  PrecisionOptions precision;
  /// Per-trial 0/1 support grids and their text rendering.
  bool write_grids = true;

  /// Effective configuration of one estimator.
  FitConfig fit_config(Algorithm a) const;
  void validate() const;
  /// key=value rendering readable back through the CLI's --config.
  std::string to_ini() const;
};

struct EstimatorRun {
  TrialErrors errors;
  SymMatrix s_hat;
  SupportMatrix support;
  int outer_iterations = 0;
  int inner_iterations = 0;
  Termination termination = Termination::MaxIter;
  bool solves_converged = true;
  double seconds = 0.0;
};

struct TrialResult {
  int trial = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::optional<SupportMatrix> true_support;
  std::vector<EstimatorRun> runs;  // in config.estimators order
  double seconds = 0.0;
};

struct QuantileSummary {
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

/// Linear-interpolation quantiles (sample quantile type 7). Throws on empty
/// input.
QuantileSummary quantile_summary(std::vector<double> values);

enum class Metric { RelativeError, SparsityError };

struct ExperimentSummary {
  ExperimentConfig config;
  std::vector<TrialResult> trials;  // sorted by trial index

  int failed_trials() const;
  /// Metric values over successful trials, in trial order.
  std::vector<double> values(Algorithm a, Metric metric) const;
  QuantileSummary stats(Algorithm a, Metric metric) const;
  Index hyperparameter_count(Algorithm a) const;
};

using TrialCallback = std::function<void(const TrialResult&)>;

/// Seed of trial t: derive_seed(master_seed, t). Results do not depend on the
/// degree of parallelism.
ExperimentSummary run_experiment(const ExperimentConfig& config,
                                 const TrialCallback& on_trial_done = {});

/// Runs one trial: generation, initialization, the configured fits, metrics.
TrialResult run_trial(const ExperimentConfig& config, int trial);

/// Writes config.ini, errors.csv, timing.csv, boxplot.csv, hyperparams.csv,
/// summary.txt, failures.csv (only when a trial failed) and, when enabled,
/// supports/. Throws std::runtime_error when there are no estimator results.
void emit_outputs(const ExperimentSummary& summary, const std::filesystem::path& dir);

std::string errors_csv(const ExperimentSummary& summary);
std::string boxplot_csv(const ExperimentSummary& summary);

/// Text rendering of supports side by side, '#' for an edge and '.'
/// otherwise, with module boundaries every m2 rows/columns.
std::string render_supports(const std::vector<std::pair<std::string, SupportMatrix>>& panels,
                            const KroneckerShape& shape);

}  // namespace qkp
