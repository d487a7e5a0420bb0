#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>

namespace hypml {

/// Seeded random source with platform-independent derived distributions.
///
/// The standard <random> distributions are implementation-defined, so every
/// draw used by the library goes through the helpers here. Together with the
/// fully specified mt19937_64 engine this makes results reproducible across
/// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the spare deviate is cached.
  double normal();

  bool coin() { return (next_u64() >> 63) != 0; }

  /// Serialized engine state plus the cached normal deviate, round-trips bit-exactly.
  std::string state() const;
  void restore(const std::string& state);

  friend bool operator==(const Rng& a, const Rng& b) {
    return a.engine_ == b.engine_ && a.has_spare_ == b.has_spare_ &&
           (!a.has_spare_ || a.spare_ == b.spare_);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hypml
