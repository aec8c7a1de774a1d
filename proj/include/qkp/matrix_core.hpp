#pragma once

// Dense symmetric-matrix kernel shared by every other module: symmetric
// storage, Cholesky certification, Kronecker block indexing, Gaussian
// sampling and the sample covariance.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

namespace qkp {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised when a matrix that must be positive definite is not.
class NotPositiveDefinite : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Dense real symmetric matrix. Symmetry is exact: the constructor stores
/// (A + A^T) / 2, which is bitwise symmetric in floating point.
class SymMatrix {
 public:
  explicit SymMatrix(const Matrix& a);

  static SymMatrix identity(Index dim);
  static SymMatrix zeros(Index dim);
  static SymMatrix diagonal(const Vector& d);

  Index dim() const { return m_.rows(); }
  double operator()(Index r, Index c) const { return m_(r, c); }
  const Matrix& matrix() const { return m_; }

  double frobenius_norm() const { return m_.norm(); }
  double abs_sum() const { return m_.cwiseAbs().sum(); }

  friend bool operator==(const SymMatrix& a, const SymMatrix& b) {
    return a.m_.rows() == b.m_.rows() && a.m_ == b.m_;
  }

 private:
  struct Trusted {};
  SymMatrix(Matrix a, Trusted) : m_(std::move(a)) {}

  Matrix m_;
};

/// Module / node structure of a Kronecker-shaped index space: m1 modules of
/// m2 nodes each, flat dimension m = m1 * m2.
struct KroneckerShape {
  Index m1 = 1;
  Index m2 = 1;

  KroneckerShape() = default;
  KroneckerShape(Index modules, Index nodes);

  Index dim() const { return m1 * m2; }

  /// 0-based flat position of node i in module j.
  Index flat(Index module, Index node) const { return module * m2 + node; }

  friend bool operator==(const KroneckerShape&, const KroneckerShape&) = default;
};

/// 1-based block coordinates (j,k,i,l) to the 1-based flat position
/// ((j-1)*m2 + i, (k-1)*m2 + l). Throws std::out_of_range.
std::pair<Index, Index> block_index(const KroneckerShape& shape, Index j,
                                    Index k, Index i, Index l);

/// N samples (rows) of an m-dimensional zero-mean vector.
class DataMatrix {
 public:
  explicit DataMatrix(Matrix samples);

  Index n_samples() const { return x_.rows(); }
  Index dim() const { return x_.cols(); }
  const Matrix& samples() const { return x_; }

 private:
  Matrix x_;
};

/// (1/N) sum_k x_k x_k^T. No centering: the model is zero mean.
SymMatrix sample_covariance(const DataMatrix& data);

struct CholeskyLogDet {
  Matrix factor;  // lower triangular L with S = L L^T
  double log_det = 0.0;
};

/// Cholesky factor and log-determinant, or nullopt when S is not positive
/// definite. Not-PD is an ordinary outcome here (line searches probe it).
std::optional<CholeskyLogDet> cholesky_logdet(const SymMatrix& s);
std::optional<CholeskyLogDet> cholesky_logdet(const Matrix& s);

/// Inverse of a positive definite matrix through its Cholesky factor.
/// Throws NotPositiveDefinite.
SymMatrix spd_inverse(const SymMatrix& s);

/// N i.i.d. draws from N(0, S_true^{-1}); S_true is a concentration matrix.
/// Deterministic in `seed`.
DataMatrix sample_gaussian(const SymMatrix& s_true, Index n, std::uint64_t seed);

}  // namespace qkp
