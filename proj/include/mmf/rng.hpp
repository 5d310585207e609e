#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace mmf {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives one key from several words. Used to give every consumer
/// (model init, per-epoch shuffle, per-sample noise, grid point) its own
/// independent stream from a single user-facing seed.
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> words) {
  std::uint64_t state = 0x8c90fd9b1a7c3e5dULL;
  for (std::uint64_t w : words) {
    state ^= w + 0x9e3779b97f4a7c15ULL + (state << 6) + (state >> 2);
    (void)splitmix64(state);
  }
  return splitmix64(state);
}

/// Deterministic counter-based generator: a splitmix64 stream over a derived
/// key. Fully specified output for a given key, independent of platform RNG
/// library internals (std::shuffle / std::normal_distribution are
/// implementation-defined and therefore never used).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix_seed({seed})) {}
  Rng(std::uint64_t seed, std::uint64_t stream) : state_(mix_seed({seed, stream})) {}
  Rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream)
      : state_(mix_seed({seed, stream, substream})) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  /// Standard normal via Box–Muller; draws two uniforms per call so the
  /// stream position does not depend on hidden spare-value state.
  double gaussian() {
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0,1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace mmf
