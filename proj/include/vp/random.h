#ifndef VP_RANDOM_H_
#define VP_RANDOM_H_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace vp {

// The standard distributions are implementation-defined, so sampling goes
// through these helpers to keep seeded outputs identical across toolchains.
using Rng = std::mt19937_64;

inline Rng MakeRng(std::initializer_list<std::uint64_t> words) {
  std::vector<std::uint32_t> parts;
  for (std::uint64_t w : words) {
    parts.push_back(static_cast<std::uint32_t>(w));
    parts.push_back(static_cast<std::uint32_t>(w >> 32));
  }
  std::seed_seq seeded(parts.begin(), parts.end());
  return Rng(seeded);
}

// Uniform double in [0, 1).
inline double Uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double UniformReal(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * Uniform01(rng);
}

// Uniform integer in [0, n). Rejection sampling avoids modulo bias.
inline std::uint64_t UniformIndex(Rng& rng, std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

// Uniform integer in [lo, hi].
inline std::int64_t UniformInt(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(
                  UniformIndex(rng, static_cast<std::uint64_t>(hi - lo) + 1));
}

inline bool Bernoulli(Rng& rng, double p) { return Uniform01(rng) < p; }

template <typename It>
void Shuffle(It first, It last, Rng& rng) {
  const auto n = last - first;
  for (auto i = n - 1; i > 0; --i) {
    const auto j = static_cast<decltype(i)>(
        UniformIndex(rng, static_cast<std::uint64_t>(i) + 1));
    std::swap(first[i], first[j]);
  }
}

}  // namespace vp

#endif  // VP_RANDOM_H_
