// marginlm/rng.h
//
// The one random number generator used everywhere in the toolkit.
//
// The generator is std::mt19937_64, whose output sequence is fixed by the
// C++ standard, and every distribution transform is written out here
// rather than taken from <random>, because the standard leaves library
// distributions implementation-defined. Same seed, same platform-
// independent stream of draws.

#ifndef MARGINLM_RNG_H_
#define MARGINLM_RNG_H_

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace marginlm {

// Derives an independent sub-seed for a named stream (source model,
// corpus sampling, channel noise, ...) from one user-facing seed.
// SplitMix64 finalizer over seed xor stream id.
inline std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed ^ (stream * 0x9E3779B97F4A7C15ull);
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t NextU64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double Uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Uniform in (0, 1]; safe under log().
  double UniformPositive() {
    return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
  }

  double UniformRange(double lo, double hi) {
    return lo + (hi - lo) * Uniform();
  }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t Below(std::uint64_t n) {
    std::uint64_t v = static_cast<std::uint64_t>(Uniform() * static_cast<double>(n));
    return v >= n ? n - 1 : v;
  }

  // Standard normal via Box-Muller (cosine branch; two draws per sample).
  double Normal() {
    double u1 = UniformPositive();
    double u2 = Uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Geometric on {1, 2, ...} with success probability p, mean 1/p.
  int Geometric(double p) {
    double u = Uniform();
    return 1 + static_cast<int>(std::floor(std::log1p(-u) / std::log1p(-p)));
  }

  // Symmetric Dirichlet with concentration 1/2 over n components.
  // Gamma(1/2) == Z^2 / 2 for standard normal Z, so each component is a
  // squared normal; normalizing the vector gives the Dirichlet draw.
  std::vector<double> DirichletHalf(int n) {
    std::vector<double> g(n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      double z = Normal();
      g[i] = 0.5 * z * z;
      sum += g[i];
    }
    for (int i = 0; i < n; ++i) g[i] /= sum;
    return g;
  }

  // Fisher-Yates.
  template <typename T>
  void Shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(Below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

// Stream ids for DeriveSeed. Fixed constants; changing them changes every
// seeded artifact.
namespace streams {
inline constexpr std::uint64_t kSourceModel = 1;
inline constexpr std::uint64_t kTrainCorpus = 2;
inline constexpr std::uint64_t kDevCorpus = 3;
inline constexpr std::uint64_t kTestCorpus = 4;
inline constexpr std::uint64_t kChannelTrain = 5;
inline constexpr std::uint64_t kChannelDev = 6;
inline constexpr std::uint64_t kChannelTest = 7;
inline constexpr std::uint64_t kInitParams = 8;
inline constexpr std::uint64_t kShuffle = 9;
}  // namespace streams

}  // namespace marginlm

#endif  // MARGINLM_RNG_H_
