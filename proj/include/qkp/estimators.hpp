#pragma once

// The three reweighted-l1 estimators. Each outer iteration solves a weighted
// graphical lasso with the current hyperparameters, then replaces the
// hyperparameters by their closed-form minimizers of the joint negative
// log-likelihood with S fixed:
//
//   S1   one scalar gamma on every entry
//   S2   one gamma_ab per entry
//   QKP  lambda_jk * gamma_il on entry (j,k,i,l): Lambda is m1 x m1 and
//        shared by all node pairs, Gamma is m2 x m2 and shared by all modules.
//
// Every hyperparameter update has the form  argmin_{x>0} a*x - b*log(x) = b/a.

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qkp/glasso.hpp"
#include "qkp/matrix_core.hpp"

namespace qkp {

enum class Algorithm { S1, S2, Qkp };

std::string_view to_string(Algorithm a);
/// Accepts "s1", "s2", "qkp" (any case). Throws std::invalid_argument.
Algorithm parse_algorithm(std::string_view name);

struct ScalarHyper {
  double gamma = 1.0;
};

struct FullHyper {
  Matrix gamma;  // m x m
};

struct QkpHyper {
  Matrix lambda;  // m1 x m1, indexed by module pair (j,k)
  Matrix gamma;   // m2 x m2, indexed by node pair (i,l)

  KroneckerShape shape() const { return {lambda.rows(), gamma.rows()}; }
};

class HyperParams {
 public:
  using Variant = std::variant<ScalarHyper, FullHyper, QkpHyper>;

  HyperParams(ScalarHyper h) : v_(std::move(h)) {}
  HyperParams(FullHyper h) : v_(std::move(h)) {}
  HyperParams(QkpHyper h) : v_(std::move(h)) {}

  /// All-ones initialization for the given algorithm.
  static HyperParams ones(Algorithm algo, const KroneckerShape& shape);

  Algorithm algorithm() const;
  const Variant& value() const { return v_; }

  /// Penalty weights seen by the graphical lasso, for flat dimension m.
  WeightMatrix weights(Index m) const;

  /// Number of free hyperparameters counting symmetric pairs once.
  Index free_count() const;

  /// Throws std::domain_error unless every entry is finite and > 0, and
  /// std::invalid_argument unless matrices are square and symmetric.
  void validate_positive() const;

 private:
  Variant v_;
};

/// Free hyperparameter count of each algorithm on a shape:
/// S1 -> 1, S2 -> m(m+1)/2, QKP -> m1(m1+1)/2 + m2(m2+1)/2.
Index hyperparameter_count(Algorithm algo, const KroneckerShape& shape);

/// Default per-entry magnitude floor, see default_fit_config. Sits below the
/// smallest off-diagonal magnitude (0.3) of the simulated models; larger
/// floors trade support recovery of QKP for lower relative error.
inline constexpr double kDefaultMagnitudeFloor = 0.22;

struct FitConfig {
  /// Hyperprior rate for S1 / S2.
  double eps = kDefaultMagnitudeFloor;
  /// Hyperprior rates for Lambda and Gamma (QKP).
  double eps1 = kDefaultMagnitudeFloor;
  double eps2 = kDefaultMagnitudeFloor;
  /// Outer stopping threshold on ||S^(h) - S^(h-1)||_F.
  double eps_stop = 1e-4;
  int max_outer_iter = 200;
  SolverOptions solver;

  /// Throws std::invalid_argument on nonpositive thresholds or counts.
  void validate() const;
};

/// Rates chosen so that every hyperparameter update reads
/// 1 / (average weighted |s| over its entries + floor):
///   S1: eps = m^2 * floor   S2: eps = floor   QKP: eps1 = m2^2 * floor, eps2 = m1^2 * floor
/// Fields not used by `algo` keep their plain defaults.
FitConfig default_fit_config(Algorithm algo, const KroneckerShape& shape,
                             double floor = kDefaultMagnitudeFloor);

enum class Termination { Converged, MaxIter };
std::string_view to_string(Termination t);

struct FitReport {
  SymMatrix s_hat;
  HyperParams hyper_final;
  /// Joint objective: entry 0 at the starting point, then one per outer
  /// iteration after its last hyperparameter update.
  std::vector<double> objective_trace{};
  /// Joint objective at the start and after every sub-step (solve, then each
  /// hyperparameter update).
  std::vector<double> substep_trace{};
  /// ||S^(h) - S^(h-1)||_F per outer iteration.
  std::vector<double> step_norms{};
  /// Final KKT residual of each inner solve.
  std::vector<double> kkt_residuals{};
  int outer_iterations = 0;
  int inner_iterations = 0;
  Termination termination = Termination::MaxIter;
  /// False when some inner solve stopped on an iteration cap.
  bool all_solves_converged = true;
};

/// Joint negative log-likelihood with constants dropped. Throws
/// NotPositiveDefinite when S is not PD and std::domain_error on a
/// nonpositive hyperparameter.
double joint_neg_loglik(const SymMatrix& s, const HyperParams& hyper,
                        const FitConfig& config, const SymMatrix& sigma, double n);

/// argmin_{x>0} a*x - b*log(x) for a, b > 0.
double log_linear_minimizer(double a, double b);

/// gamma = m^2 / (sum_ab |s_ab| + eps).
double update_gamma_s1(const SymMatrix& s, double eps);
/// gamma_ab = 1 / (|s_ab| + eps).
Matrix update_gamma_s2(const SymMatrix& s, double eps);
/// lambda_jk = m2^2 / (sum_il gamma_il |s_jk,il| + eps1).
Matrix update_lambda_qkp(const SymMatrix& s, const Matrix& gamma_prev, double eps1,
                         const KroneckerShape& shape);
/// gamma_il = m1^2 / (sum_jk lambda_jk |s_jk,il| + eps2), with the Lambda
/// already updated in the same outer iteration.
Matrix update_gamma_qkp(const SymMatrix& s, const Matrix& lambda_new, double eps2,
                        const KroneckerShape& shape);

/// Runs the outer loop of `algo` from `init` until the iterate moves less
/// than eps_stop or max_outer_iter is reached. The first solve starts from
/// diag(1/Sigma_aa); later solves warm start from the previous estimate.
FitReport fit(const SymMatrix& sigma, double n, Algorithm algo, const HyperParams& init,
              const FitConfig& config);

}  // namespace qkp
