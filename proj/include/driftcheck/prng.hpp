#pragma once

#include <cstdint>
#include <string_view>

namespace driftcheck {

// SplitMix64. Small, fast, and easy to reimplement exactly in another
// language, which is what makes runs reproducible across tools.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) using the top 53 bits, so the value is exact in double.
  double next_double() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  float next_float01() { return static_cast<float>(next_double()); }

  // Uniform in [-scale, scale].
  float next_symmetric(float scale) {
    return static_cast<float>((2.0 * next_double() - 1.0) * scale);
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Every independent random stream hangs off the run seed and a stable label
// ("input:0", a parameter name). Two streams with different labels never
// collide, and adding a stream never shifts the values of existing ones.
inline std::uint64_t derive_stream_seed(std::uint64_t seed,
                                        std::string_view label) {
  SplitMix64 g(seed ^ fnv1a64(label));
  return g.next();
}

inline SplitMix64 make_stream(std::uint64_t seed, std::string_view label) {
  return SplitMix64(derive_stream_seed(seed, label));
}

}  // namespace driftcheck
