#include "qkp/glasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace qkp {

namespace {

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

// Everything below works on F(X) = -log|X| + tr(X Sigma) + sum L_ab |x_ab|
// with L = 2W/N, i.e. f = (N/2) F.
struct ScaledProblem {
  const Matrix& sigma;
  Matrix penalty;
  double half_n;

  double penalty_term(const Matrix& x) const {
    return penalty.cwiseProduct(x.cwiseAbs()).sum();
  }

  // +inf when x is not PD.
  double value(const Matrix& x) const {
    const auto chol = cholesky_logdet(x);
    if (!chol) return std::numeric_limits<double>::infinity();
    return -chol->log_det + x.cwiseProduct(sigma).sum() + penalty_term(x);
  }

  double kkt(const Matrix& x, const Matrix& x_inv) const {
    double worst = 0.0;
    const Index m = x.rows();
    for (Index c = 0; c < m; ++c) {
      for (Index r = 0; r < m; ++r) {
        const double g = sigma(r, c) - x_inv(r, c);
        const double lam = penalty(r, c);
        double v;
        if (x(r, c) > 0.0) {
          v = std::abs(g + lam);
        } else if (x(r, c) < 0.0) {
          v = std::abs(g - lam);
        } else {
          v = std::max(0.0, std::abs(g) - lam);
        }
        worst = std::max(worst, v);
      }
    }
    return worst;
  }
};

std::optional<Matrix> inverse_if_pd(const Matrix& x) {
  Eigen::LLT<Matrix> llt(x);
  if (llt.info() != Eigen::Success) return std::nullopt;
  Matrix inv = llt.solve(Matrix::Identity(x.rows(), x.cols()));
  return Matrix((inv + inv.transpose()) * 0.5);
}

void zero_small(Matrix& x, double threshold) {
  x = x.unaryExpr([threshold](double v) { return std::abs(v) < threshold ? 0.0 : v; });
}

struct AdmmResult {
  Matrix z;        // sparse iterate (exact zeros from thresholding)
  Matrix s;        // log-det iterate, always PD
  int iterations = 0;
};

AdmmResult run_admm(const ScaledProblem& p, const Matrix& x0, const SolverOptions& opts) {
  const Index m = x0.rows();
  const double tol = opts.admm_tol_scale * static_cast<double>(m);
  double rho = opts.rho_init > 0.0 ? opts.rho_init : 1.0;

  AdmmResult out;
  out.z = x0;
  out.s = x0;
  // Scaled dual from the stationarity condition rho*U = X^{-1} - Sigma,
  // clipped into the subdifferential box of the l1 term.
  Matrix u = Matrix::Zero(m, m);
  if (auto inv = inverse_if_pd(x0)) {
    const Matrix g = *inv - p.sigma;
    u = g.cwiseMax(-p.penalty).cwiseMin(p.penalty) / rho;
  }

  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  Matrix z_old(m, m);
  for (int k = 0; k < opts.max_inner_iter; ++k) {
    // S-update: argmin -log|S| + tr(S Sigma) + rho/2 ||S - Z + U||^2.
    eig.compute(rho * (out.z - u) - p.sigma);
    const Vector& d = eig.eigenvalues();
    Vector sv(m);
    for (Index i = 0; i < m; ++i) {
      sv(i) = (d(i) + std::sqrt(d(i) * d(i) + 4.0 * rho)) / (2.0 * rho);
    }
    const Matrix& q = eig.eigenvectors();
    out.s = q * sv.asDiagonal() * q.transpose();
    out.s = ((out.s + out.s.transpose()) * 0.5).eval();

    // Z-update: entrywise soft-thresholding by L / rho.
    z_old = out.z;
    const Matrix v = out.s + u;
    for (Index c = 0; c < m; ++c) {
      for (Index r = 0; r < m; ++r) {
        out.z(r, c) = soft_threshold(v(r, c), p.penalty(r, c) / rho);
      }
    }
    u += out.s - out.z;
    out.iterations = k + 1;

    const double primal = (out.s - out.z).norm();
    const double dual = rho * (out.z - z_old).norm();
    if (primal <= tol && dual <= tol) break;

    if (primal > 10.0 * dual) {
      rho *= 2.0;
      u *= 0.5;
    } else if (dual > 10.0 * primal) {
      rho *= 0.5;
      u *= 2.0;
    }
  }
  return out;
}

}  // namespace

WeightMatrix::WeightMatrix(const Matrix& w) {
  if (w.rows() != w.cols() || w.rows() < 1) {
    throw std::invalid_argument("WeightMatrix: must be square and non-empty");
  }
  if (!w.allFinite() || (w.array() < 0.0).any()) {
    throw std::invalid_argument("WeightMatrix: entries must be finite and >= 0");
  }
  if (w != w.transpose()) throw std::invalid_argument("WeightMatrix: not symmetric");
  w_ = w;
}

WeightMatrix WeightMatrix::uniform(Index dim, double gamma) {
  return WeightMatrix(Matrix::Constant(dim, dim, gamma));
}

WeightMatrix WeightMatrix::kronecker(const Matrix& lambda, const Matrix& gamma) {
  const KroneckerShape shape(lambda.rows(), gamma.rows());
  Matrix w(shape.dim(), shape.dim());
  for (Index j = 0; j < shape.m1; ++j) {
    for (Index k = 0; k < shape.m1; ++k) {
      w.block(j * shape.m2, k * shape.m2, shape.m2, shape.m2) = lambda(j, k) * gamma;
    }
  }
  return WeightMatrix(w);
}

double glasso_objective(const Matrix& s, const SymMatrix& sigma, double n,
                        const WeightMatrix& w) {
  const ScaledProblem p{sigma.matrix(), w.matrix() * (2.0 / n), 0.5 * n};
  return p.half_n * p.value(s);
}

double glasso_kkt_residual(const Matrix& s, const SymMatrix& sigma, double n,
                           const WeightMatrix& w) {
  const auto inv = inverse_if_pd(s);
  if (!inv) throw NotPositiveDefinite("glasso_kkt_residual: S is not PD");
  const ScaledProblem p{sigma.matrix(), w.matrix() * (2.0 / n), 0.5 * n};
  return p.half_n * p.kkt(s, *inv);
}

GlassoSolution solve_weighted_glasso(const SymMatrix& sigma, double n,
                                     const WeightMatrix& w, const SolverOptions& opts,
                                     const std::optional<SymMatrix>& warm_start) {
  const Index m = sigma.dim();
  if (w.dim() != m) {
    throw std::invalid_argument("solve_weighted_glasso: weight dimension " +
                                std::to_string(w.dim()) + " != " + std::to_string(m));
  }
  if (!(n > 0.0)) throw std::invalid_argument("solve_weighted_glasso: N must be > 0");
  if (!cholesky_logdet(sigma)) {
    throw NotPositiveDefinite("solve_weighted_glasso: sample covariance is not PD");
  }

  ScaledProblem p{sigma.matrix(), w.matrix() * (2.0 / n), 0.5 * n};
  if (!opts.penalize_diagonal) p.penalty.diagonal().setZero();
  const double kkt_tol = opts.kkt_tol > 0.0 ? opts.kkt_tol : 1e-6 * n;
  const double polish_tol_scaled = std::min(1.0, std::max(opts.polish_ratio, 0.0)) * kkt_tol / p.half_n;

  Matrix x0 = sigma.matrix().diagonal().cwiseInverse().asDiagonal();
  std::optional<Matrix> warm;
  if (opts.warm_start && warm_start && warm_start->dim() == m &&
      cholesky_logdet(*warm_start)) {
    warm = warm_start->matrix();
    x0 = *warm;
  }

  GlassoSolution sol{.s_hat = SymMatrix::identity(m)};
  const AdmmResult admm = run_admm(p, x0, opts);
  sol.admm_iterations = admm.iterations;

  // Refinement start: the best PD point among the ADMM output and the warm
  // start. Descent from here keeps the objective below the warm start's.
  Matrix x = cholesky_logdet(admm.z) ? admm.z : admm.s;
  double fx = p.value(x);
  if (warm) {
    const double fw = p.value(*warm);
    if (fw < fx) {
      x = *warm;
      fx = fw;
    }
  }
  Matrix x_inv = *inverse_if_pd(x);
  sol.objective_trace.push_back(p.half_n * fx);

  constexpr double kArmijo = 1e-4;
  const Index dim = m;
  std::vector<std::pair<Index, Index>> free_set;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> u(dim, dim);
  double kkt = p.kkt(x, x_inv);
  for (int it = 0; it < opts.max_newton_iter && kkt > polish_tol_scaled; ++it) {
    const Matrix g = p.sigma - x_inv;

    free_set.clear();
    for (Index c = 0; c < dim; ++c) {
      for (Index r = 0; r <= c; ++r) {
        if (x(r, c) != 0.0 || std::abs(g(r, c)) > p.penalty(r, c)) free_set.emplace_back(r, c);
      }
    }

    // Coordinate descent on the second-order model; `target` holds X + D and
    // u holds D * X^{-1}.
    Matrix target = x;
    u.setZero();
    const int sweeps = std::min(1 + it / 2, 20);
    for (int sweep = 0; sweep < sweeps; ++sweep) {
      for (const auto& [i, j] : free_set) {
        double a, b;
        if (i == j) {
          a = x_inv(i, i) * x_inv(i, i);
          b = g(i, i) + x_inv.col(i).dot(u.col(i));
        } else {
          a = x_inv(i, j) * x_inv(i, j) + x_inv(i, i) * x_inv(j, j);
          b = g(i, j) + x_inv.col(i).dot(u.col(j));
        }
        const double c = target(i, j);
        const double next = soft_threshold(c - b / a, p.penalty(i, j) / a);
        const double mu = next - c;
        if (mu == 0.0) continue;
        target(i, j) = next;
        target(j, i) = next;
        u.row(i) += mu * x_inv.row(j);
        if (i != j) u.row(j) += mu * x_inv.row(i);
      }
    }

    const Matrix step = target - x;
    const double delta =
        g.cwiseProduct(step).sum() + p.penalty_term(target) - p.penalty_term(x);
    // Below this the predicted change is lost in the rounding of f, so a
    // full step is judged by the KKT residual instead.
    const double f_noise = 1e-14 * (1.0 + std::abs(fx));
    const bool at_noise = std::abs(delta) < 10.0 * f_noise;
    if (!(delta < 0.0) && !at_noise) break;

    bool accepted = false;
    double alpha = 1.0;
    Matrix trial;
    double f_trial = 0.0;
    std::optional<Matrix> trial_inv;
    for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
      trial = alpha == 1.0 ? target : Matrix(x + alpha * step);
      zero_small(trial, opts.zero_threshold);
      f_trial = p.value(trial);
      if (f_trial <= fx + kArmijo * alpha * delta) {
        accepted = true;
        break;
      }
      if (at_noise && alpha == 1.0 && f_trial <= fx + f_noise) {
        trial_inv = inverse_if_pd(trial);
        if (trial_inv && p.kkt(trial, *trial_inv) < kkt) {
          accepted = true;
          break;
        }
      }
      if (at_noise) break;
    }
    if (!accepted) break;

    x = std::move(trial);
    fx = f_trial;
    x_inv = trial_inv ? std::move(*trial_inv) : *inverse_if_pd(x);
    kkt = p.kkt(x, x_inv);
    sol.newton_iterations = it + 1;
    sol.objective_trace.push_back(p.half_n * fx);
  }

  sol.s_hat = SymMatrix(x);
  sol.objective = p.half_n * fx;
  sol.kkt_residual = p.half_n * kkt;
  sol.converged = sol.kkt_residual <= kkt_tol;
  sol.inner_iterations = sol.admm_iterations + sol.newton_iterations;
  return sol;
}

}  // namespace qkp
