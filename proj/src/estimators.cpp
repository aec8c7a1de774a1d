#include "qkp/estimators.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <type_traits>

namespace qkp {

namespace {

void require_symmetric_positive(const Matrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() < 1) {
    throw std::invalid_argument(std::string(what) + ": must be square and non-empty");
  }
  if (a != a.transpose()) throw std::invalid_argument(std::string(what) + ": not symmetric");
  if (!a.allFinite() || (a.array() <= 0.0).any()) {
    throw std::domain_error(std::string(what) + ": entries must be finite and > 0");
  }
}

// Entry (j,k) of the result is sum_il weight(i,l) |s_jk,il|.
Matrix weighted_block_sums(const Matrix& abs_s, const Matrix& node_weight,
                           const KroneckerShape& shape) {
  Matrix out(shape.m1, shape.m1);
  for (Index k = 0; k < shape.m1; ++k) {
    for (Index j = 0; j < shape.m1; ++j) {
      out(j, k) = abs_s.block(j * shape.m2, k * shape.m2, shape.m2, shape.m2)
                      .cwiseProduct(node_weight)
                      .sum();
    }
  }
  return out;
}

// Entry (i,l) of the result is sum_jk weight(j,k) |s_jk,il|.
Matrix weighted_node_sums(const Matrix& abs_s, const Matrix& module_weight,
                          const KroneckerShape& shape) {
  Matrix out = Matrix::Zero(shape.m2, shape.m2);
  for (Index k = 0; k < shape.m1; ++k) {
    for (Index j = 0; j < shape.m1; ++j) {
      out += module_weight(j, k) *
             abs_s.block(j * shape.m2, k * shape.m2, shape.m2, shape.m2);
    }
  }
  return out;
}

void check_shape(const SymMatrix& s, const KroneckerShape& shape) {
  if (s.dim() != shape.dim()) {
    throw std::invalid_argument("matrix dimension does not match m1 * m2");
  }
}

}  // namespace

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::S1: return "S1";
    case Algorithm::S2: return "S2";
    case Algorithm::Qkp: return "QKP";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "s1") return Algorithm::S1;
  if (lower == "s2") return Algorithm::S2;
  if (lower == "qkp") return Algorithm::Qkp;
  throw std::invalid_argument("unknown algorithm '" + std::string(name) +
                              "' (expected s1, s2 or qkp)");
}

std::string_view to_string(Termination t) {
  return t == Termination::Converged ? "converged" : "max_iter";
}

HyperParams HyperParams::ones(Algorithm algo, const KroneckerShape& shape) {
  switch (algo) {
    case Algorithm::S1: return ScalarHyper{1.0};
    case Algorithm::S2: return FullHyper{Matrix::Ones(shape.dim(), shape.dim())};
    case Algorithm::Qkp:
      return QkpHyper{Matrix::Ones(shape.m1, shape.m1), Matrix::Ones(shape.m2, shape.m2)};
  }
  throw std::invalid_argument("HyperParams::ones: bad algorithm");
}

Algorithm HyperParams::algorithm() const {
  return static_cast<Algorithm>(v_.index());
}

WeightMatrix HyperParams::weights(Index m) const {
  return std::visit(
      [m](const auto& h) -> WeightMatrix {
        using T = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<T, ScalarHyper>) {
          return WeightMatrix::uniform(m, h.gamma);
        } else if constexpr (std::is_same_v<T, FullHyper>) {
          if (h.gamma.rows() != m) throw std::invalid_argument("S2 hyperparameter dimension mismatch");
          return WeightMatrix(h.gamma);
        } else {
          if (h.lambda.rows() * h.gamma.rows() != m) {
            throw std::invalid_argument("QKP hyperparameter shape does not match dimension");
          }
          return WeightMatrix::kronecker(h.lambda, h.gamma);
        }
      },
      v_);
}

Index HyperParams::free_count() const {
  return std::visit(
      [](const auto& h) -> Index {
        using T = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<T, ScalarHyper>) {
          return 1;
        } else if constexpr (std::is_same_v<T, FullHyper>) {
          return h.gamma.rows() * (h.gamma.rows() + 1) / 2;
        } else {
          return h.lambda.rows() * (h.lambda.rows() + 1) / 2 +
                 h.gamma.rows() * (h.gamma.rows() + 1) / 2;
        }
      },
      v_);
}

void HyperParams::validate_positive() const {
  std::visit(
      [](const auto& h) {
        using T = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<T, ScalarHyper>) {
          if (!std::isfinite(h.gamma) || h.gamma <= 0.0) {
            throw std::domain_error("S1 hyperparameter must be finite and > 0");
          }
        } else if constexpr (std::is_same_v<T, FullHyper>) {
          require_symmetric_positive(h.gamma, "S2 Gamma");
        } else {
          require_symmetric_positive(h.lambda, "QKP Lambda");
          require_symmetric_positive(h.gamma, "QKP Gamma");
        }
      },
      v_);
}

Index hyperparameter_count(Algorithm algo, const KroneckerShape& shape) {
  switch (algo) {
    case Algorithm::S1: return 1;
    case Algorithm::S2: return shape.dim() * (shape.dim() + 1) / 2;
    case Algorithm::Qkp: return shape.m1 * (shape.m1 + 1) / 2 + shape.m2 * (shape.m2 + 1) / 2;
  }
  return 0;
}

FitConfig default_fit_config(Algorithm algo, const KroneckerShape& shape, double floor) {
  if (!(floor > 0.0) || !std::isfinite(floor)) {
    throw std::invalid_argument("default_fit_config: floor must be > 0");
  }
  const auto sq = [](Index v) { return static_cast<double>(v) * static_cast<double>(v); };
  FitConfig c;
  switch (algo) {
    case Algorithm::S1: c.eps = sq(shape.dim()) * floor; break;
    case Algorithm::S2: c.eps = floor; break;
    case Algorithm::Qkp:
      c.eps1 = sq(shape.m2) * floor;
      c.eps2 = sq(shape.m1) * floor;
      break;
  }
  return c;
}

void FitConfig::validate() const {
  const auto pos = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!pos(eps) || !pos(eps1) || !pos(eps2)) {
    throw std::invalid_argument("FitConfig: eps, eps1 and eps2 must be > 0");
  }
  if (!pos(eps_stop)) throw std::invalid_argument("FitConfig: eps_stop must be > 0");
  if (max_outer_iter < 1) throw std::invalid_argument("FitConfig: max_outer_iter must be >= 1");
  if (solver.max_inner_iter < 1 || solver.max_newton_iter < 0) {
    throw std::invalid_argument("FitConfig: solver iteration caps must be positive");
  }
}

double joint_neg_loglik(const SymMatrix& s, const HyperParams& hyper,
                        const FitConfig& config, const SymMatrix& sigma, double n) {
  hyper.validate_positive();
  if (s.dim() != sigma.dim()) throw std::invalid_argument("joint_neg_loglik: dimension mismatch");
  const auto chol = cholesky_logdet(s);
  if (!chol) throw NotPositiveDefinite("joint_neg_loglik: S is not positive definite");

  const Matrix abs_s = s.matrix().cwiseAbs();
  const double m = static_cast<double>(s.dim());
  double value = -0.5 * n * chol->log_det + 0.5 * n * s.matrix().cwiseProduct(sigma.matrix()).sum();

  std::visit(
      [&](const auto& h) {
        using T = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<T, ScalarHyper>) {
          value += h.gamma * abs_s.sum();
          value += config.eps * h.gamma - m * m * std::log(h.gamma);
        } else if constexpr (std::is_same_v<T, FullHyper>) {
          if (h.gamma.rows() != s.dim()) throw std::invalid_argument("S2 Gamma dimension mismatch");
          value += h.gamma.cwiseProduct(abs_s).sum();
          value += config.eps * h.gamma.sum() - h.gamma.array().log().sum();
        } else {
          const KroneckerShape shape = h.shape();
          check_shape(s, shape);
          const double m1 = static_cast<double>(shape.m1);
          const double m2 = static_cast<double>(shape.m2);
          value += h.lambda.cwiseProduct(weighted_block_sums(abs_s, h.gamma, shape)).sum();
          value += config.eps1 * h.lambda.sum() - m2 * m2 * h.lambda.array().log().sum();
          value += config.eps2 * h.gamma.sum() - m1 * m1 * h.gamma.array().log().sum();
        }
      },
      hyper.value());
  return value;
}

double log_linear_minimizer(double a, double b) { return b / a; }

double update_gamma_s1(const SymMatrix& s, double eps) {
  const double m = static_cast<double>(s.dim());
  return log_linear_minimizer(s.abs_sum() + eps, m * m);
}

Matrix update_gamma_s2(const SymMatrix& s, double eps) {
  return s.matrix().unaryExpr([eps](double v) { return log_linear_minimizer(std::abs(v) + eps, 1.0); });
}

Matrix update_lambda_qkp(const SymMatrix& s, const Matrix& gamma_prev, double eps1,
                         const KroneckerShape& shape) {
  check_shape(s, shape);
  const double b = static_cast<double>(shape.m2 * shape.m2);
  Matrix a = weighted_block_sums(s.matrix().cwiseAbs(), gamma_prev, shape);
  a = ((a + a.transpose()) * 0.5).eval();  // exact symmetry despite summation order
  return a.unaryExpr([&](double v) { return log_linear_minimizer(v + eps1, b); });
}

Matrix update_gamma_qkp(const SymMatrix& s, const Matrix& lambda_new, double eps2,
                        const KroneckerShape& shape) {
  check_shape(s, shape);
  const double b = static_cast<double>(shape.m1 * shape.m1);
  Matrix a = weighted_node_sums(s.matrix().cwiseAbs(), lambda_new, shape);
  a = ((a + a.transpose()) * 0.5).eval();
  return a.unaryExpr([&](double v) { return log_linear_minimizer(v + eps2, b); });
}

FitReport fit(const SymMatrix& sigma, double n, Algorithm algo, const HyperParams& init,
              const FitConfig& config) {
  config.validate();
  init.validate_positive();
  if (init.algorithm() != algo) {
    throw std::invalid_argument("fit: initial hyperparameters do not match the algorithm");
  }
  if (!(n > 0.0)) throw std::invalid_argument("fit: N must be > 0");
  const Index m = sigma.dim();
  (void)init.weights(m);  // dimension check
  if (!cholesky_logdet(sigma)) throw NotPositiveDefinite("fit: sample covariance is not PD");

  SymMatrix s_prev = SymMatrix::diagonal(sigma.matrix().diagonal().cwiseInverse());
  HyperParams hyper = init;
  FitReport report{.s_hat = s_prev, .hyper_final = hyper};

  const auto objective = [&](const SymMatrix& s) {
    return joint_neg_loglik(s, hyper, config, sigma, n);
  };
  double current = objective(s_prev);
  report.objective_trace.push_back(current);
  report.substep_trace.push_back(current);

  for (int h = 1; h <= config.max_outer_iter; ++h) {
    // (P1) penalized likelihood with the previous hyperparameters.
    GlassoSolution sol = solve_weighted_glasso(sigma, n, hyper.weights(m), config.solver, s_prev);
    report.inner_iterations += sol.inner_iterations;
    report.kkt_residuals.push_back(sol.kkt_residual);
    report.all_solves_converged = report.all_solves_converged && sol.converged;
    const SymMatrix& s = sol.s_hat;
    report.substep_trace.push_back(objective(s));

    // (P2)/(P3) closed-form hyperparameter minimizers, applied in sequence.
    switch (algo) {
      case Algorithm::S1:
        hyper = ScalarHyper{update_gamma_s1(s, config.eps)};
        report.substep_trace.push_back(objective(s));
        break;
      case Algorithm::S2:
        hyper = FullHyper{update_gamma_s2(s, config.eps)};
        report.substep_trace.push_back(objective(s));
        break;
      case Algorithm::Qkp: {
        const auto& q = std::get<QkpHyper>(hyper.value());
        const KroneckerShape shape = q.shape();
        Matrix gamma_prev = q.gamma;
        Matrix lambda = update_lambda_qkp(s, gamma_prev, config.eps1, shape);
        hyper = QkpHyper{lambda, gamma_prev};
        report.substep_trace.push_back(objective(s));
        Matrix gamma = update_gamma_qkp(s, lambda, config.eps2, shape);
        hyper = QkpHyper{std::move(lambda), std::move(gamma)};
        report.substep_trace.push_back(objective(s));
        break;
      }
    }
    current = report.substep_trace.back();
    report.objective_trace.push_back(current);

    const double moved = (s.matrix() - s_prev.matrix()).norm();
    report.step_norms.push_back(moved);
    report.outer_iterations = h;
    s_prev = s;
    if (h >= 2 && moved <= config.eps_stop) {
      report.termination = Termination::Converged;
      break;
    }
  }

  report.s_hat = s_prev;
  report.hyper_final = hyper;
  return report;
}

}  // namespace qkp
