#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace epidirect {

/// SplitMix64 finalizer; used to derive independent per-task seeds.
std::uint64_t mix64(std::uint64_t x);

/// Deterministic seed for a work item identified by (root, keys...).
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> keys);

/// A seeded random stream. Uniform draws lie strictly inside (0, 1) so that
/// inverse-CDF transforms never see 0 or 1.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  double uniform01();
  double normal(double mean, double sd);
  std::uint64_t poisson(double mean);
  bool bernoulli(double p) { return uniform01() < p; }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace epidirect
