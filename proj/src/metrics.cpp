#include "qkp/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace qkp {

namespace {

void require_same_dim(Index a, Index b) {
  if (a != b) throw std::invalid_argument("metrics: dimension mismatch");
}

}  // namespace

SupportMatrix extract_support(const SymMatrix& s_hat, double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("extract_support: tau must be >= 0");
  const Matrix& s = s_hat.matrix();
  const double cut = tau * std::max(s.diagonal().cwiseAbs().maxCoeff(), 1.0);
  Matrix e = (s.array().abs() > cut).cast<double>();
  e.diagonal().setOnes();
  return SupportMatrix(e);
}

double relative_error(const SymMatrix& s_true, const SymMatrix& s_hat) {
  require_same_dim(s_true.dim(), s_hat.dim());
  const double denom = s_true.frobenius_norm();
  if (denom == 0.0) throw std::invalid_argument("relative_error: S_true is zero");
  return (s_true.matrix() - s_hat.matrix()).norm() / denom;
}

double sparsity_error(const SupportMatrix& e_true, const SupportMatrix& e_hat) {
  require_same_dim(e_true.dim(), e_hat.dim());
  const double m = static_cast<double>(e_true.dim());
  return (e_true.matrix() - e_hat.matrix()).norm() / (m * (m + 1.0) / 2.0);
}

double mismatch_fraction(const SupportMatrix& e_true, const SupportMatrix& e_hat) {
  require_same_dim(e_true.dim(), e_hat.dim());
  const Index m = e_true.dim();
  if (m < 2) return 0.0;
  const double differing = (e_true.matrix() - e_hat.matrix()).cwiseAbs().sum() / 2.0;
  return differing / (static_cast<double>(m) * static_cast<double>(m - 1) / 2.0);
}

EdgeCounts edge_counts(const SupportMatrix& e_true, const SupportMatrix& e_hat) {
  require_same_dim(e_true.dim(), e_hat.dim());
  EdgeCounts out;
  for (Index c = 0; c < e_true.dim(); ++c) {
    for (Index r = 0; r < c; ++r) {
      const bool t = e_true(r, c), h = e_hat(r, c);
      if (t && h) ++out.true_positives;
      if (!t && h) ++out.false_positives;
      if (t && !h) ++out.false_negatives;
    }
  }
  return out;
}

TrialErrors evaluate_estimate(Algorithm estimator, const SymMatrix& s_true,
                              const SupportMatrix& e_true, const SymMatrix& s_hat,
                              double tau) {
  const SupportMatrix e_hat = extract_support(s_hat, tau);
  TrialErrors out;
  out.estimator = estimator;
  out.e_rel = relative_error(s_true, s_hat);
  out.e_sp = sparsity_error(e_true, e_hat);
  out.mismatch = mismatch_fraction(e_true, e_hat);
  out.counts = edge_counts(e_true, e_hat);
  return out;
}

}  // namespace qkp
