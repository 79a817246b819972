#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace kzpp {

/// Derives an independent 64-bit seed for a named sub-stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Seeded generator with platform-independent draws.
///
/// Only the raw 64-bit output of the Mersenne engine is used; the standard
/// distribution adaptors are implementation-defined and would break
/// cross-platform reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform();  // [0, 1)
  double normal();
  std::size_t below(std::size_t bound);
  bool bernoulli(double p) { return p >= 1.0 || uniform() < p; }
  double sign() { return (next() >> 63) != 0 ? -1.0 : 1.0; }

  /// `count` distinct indices from [0, pool), sorted ascending.
  std::vector<std::size_t> subset(std::size_t pool, std::size_t count);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace kzpp
