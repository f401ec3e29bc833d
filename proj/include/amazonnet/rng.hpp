#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace amazonnet {

namespace detail {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

// xoshiro256++ seeded through splitmix64. Pure integer arithmetic, so the
// raw stream is identical on every platform. Purpose streams (init, dropout,
// data-shuffle, synth) are derived from the root seed by labeled split, which
// depends only on (seed, label), never on how much of the parent was consumed.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed) {
    uint64_t sm = seed;
    for (auto& w : state_) w = detail::splitmix64(sm);
  }

  uint64_t seed() const { return seed_; }

  uint64_t next_u64() {
    const uint64_t result = std::rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = std::rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, n). Modulo bias is negligible for the n used here and the
  // mapping is trivially reproducible.
  uint64_t next_below(uint64_t n) { return next_u64() % n; }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  int64_t uniform_int(int64_t lo, int64_t hi) {  // inclusive range
    return lo + static_cast<int64_t>(next_below(static_cast<uint64_t>(hi - lo + 1)));
  }

  // Standard normal via Box-Muller; the spare of each pair is cached.
  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586477 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Child stream keyed by (constructing seed, label): independent of the
  // parent's consumption so the stream layout is stable across runs.
  Rng split(std::string_view label) const {
    uint64_t mixer = seed_ ^ detail::fnv1a64(label);
    return Rng(detail::splitmix64(mixer));
  }

  // Cursor serialization for checkpoint resume.
  static constexpr int kCursorWords = 6;
  std::array<uint64_t, kCursorWords> cursor() const {
    return {state_[0], state_[1], state_[2], state_[3],
            has_spare_ ? 1ULL : 0ULL, std::bit_cast<uint64_t>(spare_)};
  }
  void restore(const std::array<uint64_t, kCursorWords>& c) {
    state_ = {c[0], c[1], c[2], c[3]};
    has_spare_ = c[4] != 0;
    spare_ = std::bit_cast<double>(c[5]);
  }

 private:
  uint64_t seed_;
  std::array<uint64_t, 4> state_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace amazonnet
