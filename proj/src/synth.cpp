#include "qkp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "qkp/csv_io.hpp"
#include "qkp/rng.hpp"

namespace qkp {

Matrix EdgeSet::indicator() const {
  Matrix e = Matrix::Identity(nodes, nodes);
  for (const auto& [a, b] : edges) {
    e(a, b) = 1.0;
    e(b, a) = 1.0;
  }
  return e;
}

SupportMatrix::SupportMatrix(const Matrix& e) : e_(e) {
  if (e.rows() != e.cols() || e.rows() < 1) {
    throw std::invalid_argument("SupportMatrix: must be square and non-empty");
  }
  if (((e.array() != 0.0) && (e.array() != 1.0)).any()) {
    throw std::invalid_argument("SupportMatrix: entries must be 0 or 1");
  }
  if (e != e.transpose()) throw std::invalid_argument("SupportMatrix: not symmetric");
  if ((e.diagonal().array() != 1.0).any()) {
    throw std::invalid_argument("SupportMatrix: diagonal must be 1");
  }
}

Index SupportMatrix::edge_count() const {
  return static_cast<Index>(std::llround((e_.sum() - static_cast<double>(dim())) / 2.0));
}

Index edge_count_for(Index n, double fraction) {
  if (n < 0) throw std::invalid_argument("edge_count_for: negative node count");
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("edge fraction must lie in [0, 1]");
  }
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  // The small guard absorbs representation error such as 0.2 * 45 = 9.000000000000002
  // or 0.5 * 5 = 2.4999999999999996.
  return static_cast<Index>(std::floor(fraction * pairs + 0.5 + 1e-9));
}

EdgeSet random_edge_set(Index n, double fraction, std::uint64_t seed) {
  const Index count = edge_count_for(n, fraction);
  std::vector<std::pair<Index, Index>> pairs;
  for (Index a = 0; a < n; ++a) {
    for (Index b = a + 1; b < n; ++b) pairs.emplace_back(a, b);
  }
  // Partial Fisher-Yates: the first `count` slots are a uniform sample.
  Rng rng(seed);
  for (Index t = 0; t < count; ++t) {
    const auto remaining = static_cast<std::uint64_t>(pairs.size()) - static_cast<std::uint64_t>(t);
    const auto pick = static_cast<Index>(rng.below(remaining)) + t;
    std::swap(pairs[t], pairs[pick]);
  }
  pairs.resize(count);
  std::sort(pairs.begin(), pairs.end());
  return EdgeSet{n, std::move(pairs)};
}

SupportMatrix kron_support(const EdgeSet& omega1, const EdgeSet& omega2,
                           const KroneckerShape& shape) {
  if (omega1.nodes != shape.m1 || omega2.nodes != shape.m2) {
    throw std::invalid_argument("kron_support: edge sets do not match the shape");
  }
  const Matrix e1 = omega1.indicator();
  const Matrix e2 = omega2.indicator();
  Matrix e(shape.dim(), shape.dim());
  for (Index j = 0; j < shape.m1; ++j) {
    for (Index k = 0; k < shape.m1; ++k) {
      for (Index i = 0; i < shape.m2; ++i) {
        for (Index l = 0; l < shape.m2; ++l) {
          e(shape.flat(j, i), shape.flat(k, l)) = e1(j, k) * e2(i, l);
        }
      }
    }
  }
  return SupportMatrix(e);
}

SymMatrix random_qkp_precision(const SupportMatrix& e, std::uint64_t seed,
                               const PrecisionOptions& opts) {
  if (!(opts.low >= 0.0 && opts.high >= opts.low && opts.margin > 0.0)) {
    throw std::invalid_argument("random_qkp_precision: need 0 <= low <= high, margin > 0");
  }
  const Index m = e.dim();
  Rng rng(seed);
  for (int attempt = 0; attempt < std::max(1, opts.max_retries); ++attempt) {
    Matrix s = Matrix::Zero(m, m);
    bool exact_support = true;
    for (Index c = 0; c < m; ++c) {
      for (Index r = 0; r < c; ++r) {
        if (!e(r, c)) continue;
        const double magnitude = rng.uniform(opts.low, opts.high);
        const double v = rng.uniform() < 0.5 ? -magnitude : magnitude;
        if (v == 0.0) exact_support = false;
        s(r, c) = v;
        s(c, r) = v;
      }
    }
    if (!exact_support) continue;
    // Strict diagonal dominance: every Gershgorin disc lies right of margin.
    for (Index a = 0; a < m; ++a) s(a, a) = s.row(a).cwiseAbs().sum() + opts.margin;
    SymMatrix out(s);
    if (!cholesky_logdet(out)) continue;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(out.matrix(), Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < opts.margin * (1.0 - 1e-12)) continue;
    return out;
  }
  throw std::runtime_error("random_qkp_precision: retries exhausted");
}

Trial generate_trial(const KroneckerShape& shape, double fraction, Index n,
                     std::uint64_t seed, const PrecisionOptions& opts) {
  const auto stream = [seed](TrialStream s) {
    return derive_seed(seed, static_cast<std::uint64_t>(s));
  };
  EdgeSet omega1 = random_edge_set(shape.m1, fraction, stream(TrialStream::Omega1));
  EdgeSet omega2 = random_edge_set(shape.m2, fraction, stream(TrialStream::Omega2));
  SupportMatrix support = kron_support(omega1, omega2, shape);
  SymMatrix s_true = random_qkp_precision(support, stream(TrialStream::Values), opts);
  DataMatrix data = sample_gaussian(s_true, n, stream(TrialStream::Samples));
  SymMatrix sigma = sample_covariance(data);
  return Trial{QkpModel{shape, std::move(omega1), std::move(omega2), std::move(support),
                        std::move(s_true), fraction, seed},
               std::move(data), std::move(sigma)};
}

std::string edges_to_text(const EdgeSet& e) {
  std::string out;
  for (const auto& [a, b] : e.edges) out += fmt::format("{} {}\n", a + 1, b + 1);
  return out;
}

void write_trial(const Trial& trial, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const QkpModel& model = trial.model;
  write_matrix_csv(dir / "S_true.csv", model.s_true.matrix());
  write_matrix_csv(dir / "E.csv", model.support.matrix());
  write_text_file(dir / "omega1.edges", edges_to_text(model.omega1));
  write_text_file(dir / "omega2.edges", edges_to_text(model.omega2));
  write_matrix_csv(dir / "data.csv", trial.data.samples());
  write_matrix_csv(dir / "sigma.csv", trial.sigma.matrix());
  write_text_file(dir / "meta.txt",
                  fmt::format("m1={}\nm2={}\nseed={}\nN={}\nfraction={}\nrng={}\n",
                              model.shape.m1, model.shape.m2, model.seed,
                              trial.data.n_samples(), format_double(model.fraction),
                              Rng::kAlgorithm));
}

}  // namespace qkp
