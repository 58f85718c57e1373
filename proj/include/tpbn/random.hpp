#pragma once

#include <cstdint>
#include <random>

namespace tpbn {

/// The seeded random stream used throughout. Samplers take it by reference
/// and touch no other state.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based stream derivation: the same (seed, index, tag) always yields
/// the same stream, independently of any other stream.
inline Rng derive_stream(std::uint64_t seed, std::uint64_t index = 0, std::uint64_t tag = 0) {
  const std::uint64_t h = splitmix64(splitmix64(splitmix64(seed) ^ index) ^ (tag * 0xd1342543de82ef95ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(tag)};
  return Rng(seq);
}

namespace rand {

inline double uniform(Rng& rng) {
  // (0,1): never returns an endpoint.
  for (;;) {
    const double u = std::generate_canonical<double, 53>(rng);
    if (u > 0.0) return u;
  }
}

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform(rng); }

inline double normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

/// Gamma(shape, rate).
inline double gamma(Rng& rng, double shape, double rate) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

inline double beta(Rng& rng, double alpha, double beta) {
  const double x = gamma(rng, alpha, 1.0);
  const double y = gamma(rng, beta, 1.0);
  return x / (x + y);
}

inline double chi_squared(Rng& rng, double df) { return gamma(rng, 0.5 * df, 0.5); }

inline bool bernoulli(Rng& rng, double p) { return uniform(rng) < p; }

}  // namespace rand
}  // namespace tpbn
