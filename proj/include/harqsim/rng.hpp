#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace harqsim {

// splitmix64 -- used only to decorrelate substream seeds derived from one
// master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Named RNG substreams. Each consumer (traffic, LOS draws, shadowing,
// fast fading, controller) owns a dedicated engine so the draw count of one
// never shifts the sequence of another.
struct RngStreams {
  std::mt19937_64 traffic;
  std::mt19937_64 los;
  std::mt19937_64 shadowing;
  std::mt19937_64 fading;
  std::mt19937_64 controller;

  explicit RngStreams(std::uint64_t master_seed)
      : traffic(splitmix64(master_seed ^ 0x7261666669635f31ULL)),
        los(splitmix64(master_seed ^ 0x6c6f735f64726177ULL)),
        shadowing(splitmix64(master_seed ^ 0x736861646f77696eULL)),
        fading(splitmix64(master_seed ^ 0x66616464696e675fULL)),
        controller(splitmix64(master_seed ^ 0x636f6e74726f6c5fULL)) {}
};

// Uniform in [0,1) with 53 random bits.
inline double uniform01(std::mt19937_64& g) {
  return (g() >> 11) * 0x1.0p-53;
}

// Exponential with the given mean. Distributions are hand-rolled (inverse
// CDF / polar / Knuth) so sequences do not depend on the stdlib vendor.
inline double exp_draw(std::mt19937_64& g, double mean) {
  return -mean * std::log1p(-uniform01(g));
}

// Standard normal via Marsaglia polar; the spare value is discarded to keep
// the generator stateless.
inline double normal_draw(std::mt19937_64& g) {
  for (;;) {
    double u = 2.0 * uniform01(g) - 1.0;
    double v = 2.0 * uniform01(g) - 1.0;
    double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

// Poisson via Knuth's product method; adequate for the small rates used here.
inline int poisson_draw(std::mt19937_64& g, double lambda) {
  if (lambda <= 0.0) return 0;
  const double limit = std::exp(-lambda);
  int k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= uniform01(g);
  } while (p > limit);
  return k - 1;
}

}  // namespace harqsim
