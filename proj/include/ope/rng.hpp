#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>

namespace ope {

/// One step of Vigna's SplitMix64. Advances `state` and returns the next
/// output word. Used for seed expansion and stream derivation only; the
/// bulk generator is xoshiro256++ below.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Hash two 64-bit words into one, via two SplitMix64 rounds. Deterministic
/// and platform-independent; collisions across small integer ids are not a
/// practical concern.
inline std::uint64_t hash_combine64(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a;
  std::uint64_t h = splitmix64(s);
  s = h ^ (b + 0x9e3779b97f4a7c15ULL);
  return splitmix64(s);
}

/// FNV-1a hash of a byte string, for turning names into stream ids.
inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Deterministic random stream: xoshiro256++ core seeded through SplitMix64.
///
/// The generator is *splittable*: `child(id)` derives an independent stream
/// from this stream's key and `id` alone, never from how much output has
/// been consumed. Deriving one stream per (trial, trajectory, ...) makes
/// results bit-identical across runs, platforms, and thread schedules.
///
/// All outputs are fully specified here (no std::*_distribution, whose
/// results vary between standard-library implementations).
class Rng {
 public:
  Rng() : Rng(0) {}

  explicit Rng(std::uint64_t seed) : key_(seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) word = splitmix64(s);
    // xoshiro256++ requires a nonzero state; a SplitMix64-expanded seed is
    // never all zero in practice, but guard anyway.
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  }

  /// The seed/derivation key this stream was built from.
  std::uint64_t key() const { return key_; }

  /// Independent stream determined by (this->key(), id) only.
  Rng child(std::uint64_t id) const { return Rng(hash_combine64(key_, id)); }

  /// Next 64 uniform random bits (xoshiro256++).
  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Fixed-point multiply keeps the draw exact
  /// and platform-independent; the bias for n << 2^64 is negligible.
  int uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("Rng::uniform_int: n must be positive");
    const auto wide = static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n);
    return static_cast<int>(wide >> 64);
  }

  /// Sample an index from an (assumed normalized) probability row by CDF
  /// scan. Always returns an index with positive probability; accumulated
  /// rounding at the top of the CDF falls through to the last such index.
  int categorical(std::span<const double> probs) {
    const double u = next_double();
    double cum = 0.0;
    int last_positive = -1;
    for (std::size_t k = 0; k < probs.size(); ++k) {
      if (probs[k] <= 0.0) continue;
      last_positive = static_cast<int>(k);
      cum += probs[k];
      if (u < cum) return last_positive;
    }
    if (last_positive < 0) throw std::invalid_argument("Rng::categorical: no positive mass");
    return last_positive;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t key_;
  std::uint64_t state_[4];
};

}  // namespace ope
