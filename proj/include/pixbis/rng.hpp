#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

namespace pixbis {

// 64-bit FNV-1a; used to derive named RNG substreams and to fingerprint files.
inline uint64_t fnv1a64(std::string_view s, uint64_t h = 14695981039346656037ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Deterministic random stream. Distributions are hand-rolled on top of
/// std::mt19937_64 so a seed produces the same draws on every platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  // Independent stream derived from a master seed and a concern tag,
  // optionally indexed (per epoch, per subject, per frame, ...).
  static Rng stream(uint64_t master, std::string_view tag) {
    return Rng(splitmix64(master ^ fnv1a64(tag)));
  }
  static Rng stream(uint64_t master, std::string_view tag, uint64_t a) {
    return Rng(splitmix64(splitmix64(master ^ fnv1a64(tag)) + a));
  }
  static Rng stream(uint64_t master, std::string_view tag, uint64_t a, uint64_t b) {
    return Rng(splitmix64(splitmix64(splitmix64(master ^ fnv1a64(tag)) + a) + b));
  }
  static Rng stream(uint64_t master, std::string_view tag, uint64_t a, uint64_t b, uint64_t c) {
    return Rng(splitmix64(splitmix64(splitmix64(splitmix64(master ^ fnv1a64(tag)) + a) + b) + c));
  }

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased draw in [0, n).
  uint64_t uniform_int(uint64_t n) {
    const uint64_t limit = ~uint64_t(0) - ~uint64_t(0) % n;
    uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Box-Muller, one value per call (two engine draws, no cached spare).
  double normal() {
    constexpr double kTau = 6.283185307179586476925286766559;
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTau * u2);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  std::string save_state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  void load_state(const std::string& state) {
    std::istringstream is(state);
    is >> engine_;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pixbis
