#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace mnclust {

// splitmix64 mixer; used to derive independent substreams from one user seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Named substreams spawned from a run seed. A run with seed s uses
// split_seed(s, tag, index) for each independent random decision, so the same
// seed gives comparable randomness across algorithms and configurations.
enum class SeedStream : std::uint64_t {
  Init = 1,
  Subsample = 2,
  Generate = 3,
  SweepRun = 4,
};

inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(seed ^ splitmix64(tag + 0x632be59bd9b4e019ULL));
}

inline std::uint64_t split_seed(std::uint64_t seed, SeedStream stream,
                                std::uint64_t index = 0) {
  return split_seed(seed,
                    static_cast<std::uint64_t>(stream) * 0x100000001b3ULL + index);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) {
  return Rng(splitmix64(seed ^ 0xda3e39cb94b95bdbULL));
}

// Dirichlet draw via independent Gamma(alpha_v, 1) variates normalized to the
// simplex. Draw order is the component order of `alpha` (fixed for
// reproducibility). If every gamma underflows to zero the draw degenerates to
// the uniform vector.
inline std::vector<double> sample_dirichlet(const std::vector<double>& alpha,
                                            Rng& rng) {
  std::vector<double> out(alpha.size());
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    std::gamma_distribution<double> gd(alpha[i], 1.0);
    out[i] = gd(rng);
    total += out[i];
  }
  if (total <= 0.0) {
    const double u = 1.0 / static_cast<double>(out.size());
    for (auto& v : out) v = u;
    return out;
  }
  for (auto& v : out) v /= total;
  return out;
}

}  // namespace mnclust
