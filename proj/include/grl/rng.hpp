#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace grl {

// splitmix64 finalizer; a bijective 64-bit mix.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Child seed for a keyed stream under `master`. Streams with different key
// paths are statistically independent; the result does not depend on the
// order in which streams are created.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t s = mix64(master);
  for (std::uint64_t k : keys) s = mix64(s ^ mix64(k + 0x632be59bd9b4e019ULL));
  return s;
}

// Seeded generator with a 19937-bit state. The engine and the seed_seq
// algorithm are fully specified by the standard, so streams are identical
// across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(make_engine(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on the open interval (0, 1) with 53 random bits.
  double uniform_open() {
    return (double(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  static std::mt19937_64 make_engine(std::uint64_t seed) {
    std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32),
                      std::uint32_t(mix64(seed)), std::uint32_t(mix64(seed) >> 32)};
    return std::mt19937_64(seq);
  }

  std::mt19937_64 engine_;
};

}  // namespace grl
