#pragma once

// Starting hyperparameters for the QKP estimator from a Kronecker fit of the
// inverse sample covariance.
//
// With M = abs(Sigma^{-1}) + eps * 1 1^T we look for positive W (m1 x m1) and
// Y (m2 x m2) with W (x) Y ~ M. In the entrywise-log domain this is linear:
//
//   log M_{jk,il} ~ w_jk + y_il,   i.e.  A z ~ b,  z = [vec(w); vec(y)],
//
//   A = [ I_m1 (x) 1_m2 (x) I_m1 (x) 1_m2 ,  1_m1 (x) I_m2 (x) 1_m1 (x) I_m2 ],
//   b = vec(log M).
//
// A has a one-dimensional null space, (w, y) -> (w + c 1 1^T, y - c 1 1^T),
// so A^T A is singular and we return the minimum-norm least-squares solution.
// The normal equations decouple into block means (a balanced two-way additive
// fit), which is what kron_log_lstsq evaluates.

#include <optional>

#include "qkp/estimators.hpp"
#include "qkp/matrix_core.hpp"

namespace qkp {

struct KronLstsqResult {
  Matrix w;  // m1 x m1, log-domain module factor
  Matrix y;  // m2 x m2, log-domain node factor
  double residual = 0.0;  // ||A z - b||_2
};

/// The dense m^2 x (m1^2 + m2^2) design matrix A (column-major vec).
Matrix kron_design_matrix(const KroneckerShape& shape);

/// Minimum-norm solution of min_z ||A z - vec(log M)||. Throws
/// std::domain_error on a nonpositive entry of M.
KronLstsqResult kron_log_lstsq(const Matrix& m, const KroneckerShape& shape);

struct KronInitResult {
  Matrix w_bar;  // (exp(w) + exp(w)^T) / 2
  Matrix y_bar;  // (exp(y) + exp(y)^T) / 2
  Matrix lambda0;  // 1 / w_bar, entrywise
  Matrix gamma0;   // 1 / y_bar, entrywise
  double residual = 0.0;
  double eps = 0.0;  // the offset actually used

  HyperParams hyper() const { return QkpHyper{lambda0, gamma0}; }
};

/// Default offset: 1e-3 times the largest entry of abs(Sigma^{-1}).
double default_init_eps(const SymMatrix& sigma_inv);

/// Throws NotPositiveDefinite when Sigma is not PD and std::invalid_argument
/// when eps <= 0 or the shape does not match.
KronInitResult init_hyperparams(const SymMatrix& sigma, const KroneckerShape& shape,
                                std::optional<double> eps = std::nullopt);

}  // namespace qkp
