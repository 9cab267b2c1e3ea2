#pragma once

#include <bit>
#include <cstdint>

namespace driftcheck {

// binary16 simulation. Values round f32 -> half (ties to even) -> f32, with
// one deviation from plain IEEE conversion: magnitudes above 65504 saturate
// to +-65504 instead of overflowing to infinity, matching accelerator
// runtimes that clamp activations. NaN stays NaN, infinity stays infinity.

inline constexpr float kHalfMax = 65504.0f;

inline std::uint16_t f32_to_f16_bits(float x) {
  const std::uint32_t bits = std::bit_cast<std::uint32_t>(x);
  const std::uint16_t sign = static_cast<std::uint16_t>((bits >> 16) & 0x8000u);
  const std::uint32_t abs = bits & 0x7FFFFFFFu;

  if (abs > 0x7F800000u) return static_cast<std::uint16_t>(sign | 0x7E00u);
  if (abs == 0x7F800000u) return static_cast<std::uint16_t>(sign | 0x7C00u);
  if (std::bit_cast<float>(abs) > kHalfMax) {
    return static_cast<std::uint16_t>(sign | 0x7BFFu);  // +-65504
  }

  const int exp = static_cast<int>(abs >> 23) - 127 + 15;  // biased for half
  const std::uint32_t mant = abs & 0x7FFFFFu;

  if (exp >= 1) {
    // Normal half. Round the 23-bit mantissa to 10 bits; a carry out of the
    // mantissa lands in the exponent field, which is exactly what rounding
    // up to the next binade needs.
    std::uint32_t m10 = mant >> 13;
    const std::uint32_t rem = mant & 0x1FFFu;
    std::uint16_t h = static_cast<std::uint16_t>((exp << 10) | m10);
    if (rem > 0x1000u || (rem == 0x1000u && (m10 & 1u))) ++h;
    return static_cast<std::uint16_t>(sign | h);
  }

  if (exp < -10) return sign;  // below half the smallest subnormal

  // Subnormal half: quantize to multiples of 2^-24.
  const std::uint32_t m = mant | 0x800000u;
  const int shift = 14 - exp;  // in [14, 24]
  const std::uint32_t q = m >> shift;
  const std::uint32_t rem = m & ((1u << shift) - 1u);
  const std::uint32_t mid = 1u << (shift - 1);
  std::uint16_t h = static_cast<std::uint16_t>(q);
  if (rem > mid || (rem == mid && (q & 1u))) ++h;
  return static_cast<std::uint16_t>(sign | h);
}

inline float f16_bits_to_f32(std::uint16_t h) {
  const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000u) << 16;
  const std::uint32_t exp = (h >> 10) & 0x1Fu;
  const std::uint32_t mant = h & 0x3FFu;

  if (exp == 0) {
    float v = static_cast<float>(mant) * 0x1.0p-24f;
    return sign ? -v : v;
  }
  if (exp == 31) {
    const std::uint32_t bits = sign | 0x7F800000u | (mant << 13);
    return std::bit_cast<float>(bits);
  }
  const std::uint32_t bits = sign | ((exp - 15 + 127) << 23) | (mant << 13);
  return std::bit_cast<float>(bits);
}

inline float round_to_half(float x) {
  return f16_bits_to_f32(f32_to_f16_bits(x));
}

}  // namespace driftcheck
