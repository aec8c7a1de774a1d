#include "qkp/kron_init.hpp"

#include <cmath>
#include <stdexcept>

namespace qkp {

Matrix kron_design_matrix(const KroneckerShape& shape) {
  const Index m1 = shape.m1, m2 = shape.m2, m = shape.dim();
  Matrix a = Matrix::Zero(m * m, m1 * m1 + m2 * m2);
  // vec index of entry (row, col) of an m x m matrix is col * m + row, with
  // row = j*m2 + i and col = k*m2 + l.
  for (Index k = 0; k < m1; ++k) {
    for (Index l = 0; l < m2; ++l) {
      for (Index j = 0; j < m1; ++j) {
        for (Index i = 0; i < m2; ++i) {
          const Index r = shape.flat(k, l) * m + shape.flat(j, i);
          a(r, k * m1 + j) = 1.0;
          a(r, m1 * m1 + l * m2 + i) = 1.0;
        }
      }
    }
  }
  return a;
}

KronLstsqResult kron_log_lstsq(const Matrix& mat, const KroneckerShape& shape) {
  const Index m1 = shape.m1, m2 = shape.m2;
  if (mat.rows() != shape.dim() || mat.cols() != shape.dim()) {
    throw std::invalid_argument("kron_log_lstsq: matrix does not match m1 * m2");
  }
  if (!mat.allFinite() || (mat.array() <= 0.0).any()) {
    throw std::domain_error("kron_log_lstsq: entries must be finite and > 0");
  }
  const Matrix b = mat.array().log().matrix();

  Matrix row_means(m1, m1);  // mean of b over (i,l) within block (j,k)
  Matrix col_means = Matrix::Zero(m2, m2);  // mean of b over (j,k) at (i,l)
  for (Index k = 0; k < m1; ++k) {
    for (Index j = 0; j < m1; ++j) {
      const auto blk = b.block(j * m2, k * m2, m2, m2);
      row_means(j, k) = blk.mean();
      col_means += blk;
    }
  }
  col_means /= static_cast<double>(m1 * m1);
  const double grand = row_means.mean();

  // Every least-squares solution is (R - a, C - g + a) for a scalar a; the
  // minimum-norm one has a = m1^2 g / (m1^2 + m2^2).
  const double n1 = static_cast<double>(m1 * m1), n2 = static_cast<double>(m2 * m2);
  const double shift = n1 * grand / (n1 + n2);

  KronLstsqResult out;
  out.w = row_means.array() - shift;
  out.y = col_means.array() - grand + shift;

  double sq = 0.0;
  for (Index k = 0; k < m1; ++k) {
    for (Index j = 0; j < m1; ++j) {
      const auto blk = b.block(j * m2, k * m2, m2, m2);
      sq += ((out.y.array() + out.w(j, k)) - blk.array()).square().sum();
    }
  }
  out.residual = std::sqrt(sq);
  return out;
}

double default_init_eps(const SymMatrix& sigma_inv) {
  return 1e-3 * sigma_inv.matrix().cwiseAbs().maxCoeff();
}

KronInitResult init_hyperparams(const SymMatrix& sigma, const KroneckerShape& shape,
                                std::optional<double> eps) {
  if (sigma.dim() != shape.dim()) {
    throw std::invalid_argument("init_hyperparams: Sigma does not match m1 * m2");
  }
  const SymMatrix sigma_inv = spd_inverse(sigma);
  const double offset = eps ? *eps : default_init_eps(sigma_inv);
  if (!(offset > 0.0) || !std::isfinite(offset)) {
    throw std::invalid_argument("init_hyperparams: eps must be > 0");
  }

  const Matrix target = sigma_inv.matrix().cwiseAbs().array() + offset;
  const KronLstsqResult fit = kron_log_lstsq(target, shape);

  KronInitResult out;
  const Matrix ew = fit.w.array().exp();
  const Matrix ey = fit.y.array().exp();
  out.w_bar = (ew + ew.transpose()) * 0.5;
  out.y_bar = (ey + ey.transpose()) * 0.5;
  out.lambda0 = out.w_bar.cwiseInverse();
  out.gamma0 = out.y_bar.cwiseInverse();
  out.residual = fit.residual;
  out.eps = offset;
  return out;
}

}  // namespace qkp
