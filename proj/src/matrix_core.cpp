#include "qkp/matrix_core.hpp"

#include <string>

#include "qkp/rng.hpp"

namespace qkp {

SymMatrix::SymMatrix(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("SymMatrix: matrix is not square (" +
                                std::to_string(a.rows()) + " x " +
                                std::to_string(a.cols()) + ")");
  }
  if (a.rows() < 1) throw std::invalid_argument("SymMatrix: empty matrix");
  if (!a.allFinite()) throw std::invalid_argument("SymMatrix: non-finite entry");
  m_ = (a + a.transpose()) * 0.5;
}

SymMatrix SymMatrix::identity(Index dim) {
  if (dim < 1) throw std::invalid_argument("SymMatrix: dim must be >= 1");
  return SymMatrix(Matrix::Identity(dim, dim), Trusted{});
}

SymMatrix SymMatrix::zeros(Index dim) {
  if (dim < 1) throw std::invalid_argument("SymMatrix: dim must be >= 1");
  return SymMatrix(Matrix::Zero(dim, dim), Trusted{});
}

SymMatrix SymMatrix::diagonal(const Vector& d) {
  if (d.size() < 1) throw std::invalid_argument("SymMatrix: dim must be >= 1");
  if (!d.allFinite()) throw std::invalid_argument("SymMatrix: non-finite entry");
  return SymMatrix(Matrix(d.asDiagonal()), Trusted{});
}

KroneckerShape::KroneckerShape(Index modules, Index nodes)
    : m1(modules), m2(nodes) {
  if (m1 < 1 || m2 < 1) {
    throw std::invalid_argument("KroneckerShape: m1 and m2 must be >= 1");
  }
}

std::pair<Index, Index> block_index(const KroneckerShape& shape, Index j,
                                    Index k, Index i, Index l) {
  const auto in = [](Index v, Index hi) { return v >= 1 && v <= hi; };
  if (!in(j, shape.m1) || !in(k, shape.m1) || !in(i, shape.m2) ||
      !in(l, shape.m2)) {
    throw std::out_of_range("block_index: index outside the Kronecker shape");
  }
  return {(j - 1) * shape.m2 + i, (k - 1) * shape.m2 + l};
}

DataMatrix::DataMatrix(Matrix samples) : x_(std::move(samples)) {
  if (x_.rows() < 1) throw std::invalid_argument("DataMatrix: no samples");
  if (x_.cols() < 1) throw std::invalid_argument("DataMatrix: zero dimension");
  if (!x_.allFinite()) throw std::invalid_argument("DataMatrix: non-finite sample");
}

SymMatrix sample_covariance(const DataMatrix& data) {
  const Matrix& x = data.samples();
  Matrix c = Matrix::Zero(x.cols(), x.cols());
  c.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose(), 1.0);
  c = c.selfadjointView<Eigen::Lower>();
  c /= static_cast<double>(x.rows());
  return SymMatrix(c);
}

std::optional<CholeskyLogDet> cholesky_logdet(const Matrix& s) {
  if (s.rows() != s.cols() || s.rows() == 0 || !s.allFinite()) return std::nullopt;
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) return std::nullopt;
  CholeskyLogDet out;
  out.factor = llt.matrixL();
  const auto diag = out.factor.diagonal();
  if ((diag.array() <= 0.0).any() || !diag.allFinite()) return std::nullopt;
  out.log_det = 2.0 * diag.array().log().sum();
  return out;
}

std::optional<CholeskyLogDet> cholesky_logdet(const SymMatrix& s) {
  return cholesky_logdet(s.matrix());
}

SymMatrix spd_inverse(const SymMatrix& s) {
  Eigen::LLT<Matrix> llt(s.matrix());
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("spd_inverse: matrix is not positive definite");
  }
  return SymMatrix(llt.solve(Matrix::Identity(s.dim(), s.dim())));
}

DataMatrix sample_gaussian(const SymMatrix& s_true, Index n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_gaussian: N must be >= 1");
  auto chol = cholesky_logdet(s_true);
  if (!chol) {
    throw NotPositiveDefinite("sample_gaussian: concentration matrix is not PD");
  }
  // S = L L^T, so x = L^{-T} z has covariance L^{-T} L^{-1} = S^{-1}.
  const Index m = s_true.dim();
  Rng rng(seed);
  Matrix z(m, n);
  for (Index c = 0; c < n; ++c) {
    for (Index r = 0; r < m; ++r) z(r, c) = rng.normal();
  }
  chol->factor.transpose().triangularView<Eigen::Upper>().solveInPlace(z);
  return DataMatrix(z.transpose());
}

}  // namespace qkp
