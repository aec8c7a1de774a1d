#pragma once

// Ground-truth QKP models and simulated datasets.

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "qkp/matrix_core.hpp"

namespace qkp {

/// Undirected simple graph on `nodes` vertices; pairs stored 0-based with
/// first < second, sorted.
struct EdgeSet {
  Index nodes = 0;
  std::vector<std::pair<Index, Index>> edges;

  /// Binary adjacency with a unit diagonal.
  Matrix indicator() const;
};

/// Binary symmetric matrix with a unit diagonal.
class SupportMatrix {
 public:
  /// Throws std::invalid_argument unless entries are 0/1, symmetric, and the
  /// diagonal is all ones.
  explicit SupportMatrix(const Matrix& e);

  Index dim() const { return e_.rows(); }
  bool operator()(Index r, Index c) const { return e_(r, c) != 0.0; }
  const Matrix& matrix() const { return e_; }
  /// Unordered off-diagonal pairs in the support.
  Index edge_count() const;

  friend bool operator==(const SupportMatrix& a, const SupportMatrix& b) {
    return a.e_ == b.e_;
  }

 private:
  Matrix e_;
};

/// round-half-up(fraction * n (n-1) / 2).
Index edge_count_for(Index n, double fraction);

/// Uniformly random set of edge_count_for(n, fraction) pairs.
EdgeSet random_edge_set(Index n, double fraction, std::uint64_t seed);

/// (E_1 with unit diagonal) (x) (E_2 with unit diagonal).
SupportMatrix kron_support(const EdgeSet& omega1, const EdgeSet& omega2,
                           const KroneckerShape& shape);

struct PrecisionOptions {
  /// Off-diagonal magnitudes are uniform on [low, high] with a random sign.
  double low = 0.3;
  double high = 0.8;
  /// Added to the absolute row sum on the diagonal; also the certified lower
  /// bound on the smallest eigenvalue.
  double margin = 0.1;
  int max_retries = 100;
};

/// Positive definite matrix whose support is exactly E. Throws
/// std::runtime_error when max_retries draws all fail.
SymMatrix random_qkp_precision(const SupportMatrix& e, std::uint64_t seed,
                               const PrecisionOptions& opts = {});

struct QkpModel {
  KroneckerShape shape;
  EdgeSet omega1;
  EdgeSet omega2;
  SupportMatrix support;
  SymMatrix s_true;
  double fraction = 0.0;
  std::uint64_t seed = 0;
};

struct Trial {
  QkpModel model;
  DataMatrix data;
  SymMatrix sigma;
};

/// Sub-stream ids inside a trial seed.
enum class TrialStream : std::uint64_t { Omega1 = 1, Omega2 = 2, Values = 3, Samples = 4 };

/// Full generation pipeline; deterministic in `seed`.
Trial generate_trial(const KroneckerShape& shape, double fraction, Index n,
                     std::uint64_t seed, const PrecisionOptions& opts = {});

/// Writes S_true.csv, E.csv, omega1.edges, omega2.edges, data.csv, sigma.csv
/// and meta.txt into `dir` (created if missing).
void write_trial(const Trial& trial, const std::filesystem::path& dir);

/// "j k" per line, 1-based.
std::string edges_to_text(const EdgeSet& e);

}  // namespace qkp
