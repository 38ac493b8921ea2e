#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace momspec {

/// Seeded generator used by every sampler. The engine is std::mt19937_64,
/// whose output sequence is fixed by the C++ standard; uniform and normal
/// variates are derived from raw 64-bit draws here rather than through the
/// implementation-defined <random> distributions, so a seed reproduces the
/// same stream with any standard library.
class Rng {
 public:
  /// Recorded in reports next to the seed.
  static constexpr std::string_view kAlgorithm = "mt19937_64+u53+box-muller/v1";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_open_low() { return 1.0 - uniform(); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Fair +/-1.
  double sign() { return (next_u64() >> 63) != 0 ? 1.0 : -1.0; }

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace momspec
