#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace schedkit {

/* All randomness in the toolkit flows through these helpers on top of
 * std::mt19937_64. The standard library distributions are not used because
 * their output is implementation-defined; the helpers below make a seed fully
 * pin down every sampled stream. */

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Independent stream seed for a named purpose ("arrivals", "models", ...).
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view purpose) {
  std::uint64_t s = base ^ fnv1a(purpose);
  return splitmix64(s);
}

inline std::mt19937_64 make_rng(std::uint64_t base, std::string_view purpose) {
  return std::mt19937_64(derive_seed(base, purpose));
}

// Uniform double in [0, 1), 53-bit resolution.
inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& g, double lo, double hi) {
  return lo + (hi - lo) * uniform01(g);
}

// Exponential with the given mean (inverse-CDF; log1p keeps u=0 finite).
inline double exponential(std::mt19937_64& g, double mean) {
  return -mean * std::log1p(-uniform01(g));
}

// Uniform integer in [lo, hi]. Modulo bias is < 2^-52 for the ranges used here.
inline std::int64_t uniform_int(std::mt19937_64& g, std::int64_t lo, std::int64_t hi) {
  const std::uint64_t n = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<std::int64_t>(g() % n);
}

// Index drawn with probability weights[i] / sum(weights).
inline std::size_t weighted_pick(std::mt19937_64& g, const std::vector<double>& weights) {
  double total = 0;
  for (double w : weights) total += w;
  double x = uniform01(g) * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    x -= weights[i];
    if (x < 0) return i;
  }
  return weights.size() - 1;
}

}  // namespace schedkit
