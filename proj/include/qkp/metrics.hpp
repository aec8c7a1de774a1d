#pragma once

#include "qkp/estimators.hpp"
#include "qkp/matrix_core.hpp"
#include "qkp/synth.hpp"

namespace qkp {

/// Off-diagonal (a,b) is an edge iff |s_ab| > tau * max(max_a |s_aa|, 1);
/// the diagonal is always in the support.
SupportMatrix extract_support(const SymMatrix& s_hat, double tau = 1e-6);

/// ||S_true - S_hat||_F / ||S_true||_F.
double relative_error(const SymMatrix& s_true, const SymMatrix& s_hat);

/// ||E_true - E_hat||_F / (m (m + 1) / 2).
double sparsity_error(const SupportMatrix& e_true, const SupportMatrix& e_hat);

/// Share of the m (m - 1) / 2 off-diagonal pairs on which the supports
/// disagree. Reported alongside sparsity_error for readability.
double mismatch_fraction(const SupportMatrix& e_true, const SupportMatrix& e_hat);

struct EdgeCounts {
  Index true_positives = 0;
  Index false_positives = 0;
  Index false_negatives = 0;
};

/// Counts over unordered off-diagonal pairs.
EdgeCounts edge_counts(const SupportMatrix& e_true, const SupportMatrix& e_hat);

struct TrialErrors {
  Algorithm estimator = Algorithm::S1;
  double e_rel = 0.0;
  double e_sp = 0.0;
  double mismatch = 0.0;
  EdgeCounts counts;
};

TrialErrors evaluate_estimate(Algorithm estimator, const SymMatrix& s_true,
                              const SupportMatrix& e_true, const SymMatrix& s_hat,
                              double tau = 1e-6);

}  // namespace qkp
