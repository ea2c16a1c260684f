#pragma once

#include <cstdint>

namespace spoofsmith {

struct RngState {
  std::uint64_t key = 0;
  std::uint64_t counter = 0;

  bool operator==(const RngState&) const = default;
};

/// Counter-based generator: the i-th draw of a stream is a pure function of
/// (key, i), so streams can be split and replayed without carrying hidden
/// state. Output mixing is the SplitMix64 finalizer.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_{mix(seed), 0} {}
  explicit Rng(RngState state) : state_(state) {}

  std::uint64_t next_u64() {
    ++state_.counter;
    return mix(state_.key + state_.counter * kGolden);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via Box-Muller; consumes two draws per sample.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Independent child stream keyed by `tag`; does not advance this stream.
  [[nodiscard]] Rng split(std::uint64_t tag) const {
    return Rng(RngState{mix(state_.key ^ mix(tag + kGolden)), 0});
  }

  [[nodiscard]] RngState state() const { return state_; }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  RngState state_;
};

}  // namespace spoofsmith
