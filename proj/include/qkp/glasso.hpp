#pragma once

// Weighted graphical lasso:
//
//   minimize  f(S) = -(N/2) log|S| + (N/2) tr(S Sigma) + sum_ab w_ab |s_ab|
//   over      S > 0
//
// with an arbitrary nonnegative symmetric weight matrix W. The sum runs over
// every ordered pair (a,b), diagonal included, so an off-diagonal weight is
// effectively counted twice.
//
// The solver runs ADMM on the log-determinant split (closed-form eigen prox
// for S, entrywise soft-thresholding for Z, adaptive rho) and then refines
// the result with proximal Newton steps under an Armijo line search until
// the KKT residual meets the tolerance. The refinement phase never increases
// the objective, and starts from whichever of the warm start and the ADMM
// iterate has the smaller objective.

#include <optional>
#include <vector>

#include "qkp/matrix_core.hpp"

namespace qkp {

/// Symmetric entrywise-nonnegative penalty weights.
class WeightMatrix {
 public:
  explicit WeightMatrix(const Matrix& w);

  /// Every entry equal to `gamma`.
  static WeightMatrix uniform(Index dim, double gamma);
  /// Entry at flat position of (j,k,i,l) equal to lambda_jk * gamma_il.
  static WeightMatrix kronecker(const Matrix& lambda, const Matrix& gamma);

  Index dim() const { return w_.rows(); }
  double operator()(Index r, Index c) const { return w_(r, c); }
  const Matrix& matrix() const { return w_; }

 private:
  Matrix w_;
};

struct SolverOptions {
  /// KKT tolerance in objective units; <= 0 selects 1e-6 * N.
  double kkt_tol = -1.0;
  /// ADMM iteration cap.
  int max_inner_iter = 5000;
  /// Proximal Newton iteration cap for the refinement phase.
  int max_newton_iter = 100;
  /// Refinement keeps going until the KKT residual is below
  /// polish_ratio * kkt_tol; convergence is still judged against kkt_tol.
  double polish_ratio = 1e-4;
  double rho_init = 1.0;
  /// ADMM stops once primal and dual residuals are <= admm_tol_scale * m.
  double admm_tol_scale = 1e-7;
  /// Start from the caller's previous solution when one is supplied.
  bool warm_start = true;
  /// When false the diagonal weights are replaced by zero.
  bool penalize_diagonal = true;
  /// |s| below this after a step is stored as an exact zero.
  double zero_threshold = 1e-10;
};

struct GlassoSolution {
  SymMatrix s_hat;
  double objective = 0.0;
  double kkt_residual = 0.0;
  /// ADMM iterations plus refinement iterations.
  int inner_iterations = 0;
  int admm_iterations = 0;
  int newton_iterations = 0;
  /// False when an iteration cap was hit before the KKT tolerance was met;
  /// the best iterate found is still returned.
  bool converged = false;
  /// Objective at the start of refinement and after every accepted step.
  /// Non-increasing up to rounding of f (relative 1e-14).
  std::vector<double> objective_trace{};
};

/// f(S) as defined above; +infinity when S is not positive definite.
double glasso_objective(const Matrix& s, const SymMatrix& sigma, double n,
                        const WeightMatrix& w);

/// Largest violation of the subgradient optimality conditions of f at S,
/// in objective units. Throws NotPositiveDefinite.
double glasso_kkt_residual(const Matrix& s, const SymMatrix& sigma, double n,
                           const WeightMatrix& w);

/// Unique minimizer of f. Throws NotPositiveDefinite when Sigma is not PD and
/// std::invalid_argument on dimension mismatch or N <= 0.
GlassoSolution solve_weighted_glasso(const SymMatrix& sigma, double n,
                                     const WeightMatrix& w,
                                     const SolverOptions& opts = {},
                                     const std::optional<SymMatrix>& warm_start = std::nullopt);

}  // namespace qkp
