#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace qkp {

/// Seedable generator with a fully specified output sequence.
///
/// The engine is std::mt19937_64, whose sequence the standard fixes. The
/// distributions are implemented here instead of taken from <random>,
/// because libstdc++ and libc++ produce different streams from
/// std::normal_distribution and friends.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm =
      "mt19937_64+u53+marsaglia-polar+lemire";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal.
  double normal();
  /// Uniform integer on [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed of sub-stream `index` of `master`: mix64(master ^ mix64(index + 1)).
/// Trial t of an experiment uses derive_seed(master, t); the streams inside a
/// trial use derive_seed(trial_seed, stream_id).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace qkp
