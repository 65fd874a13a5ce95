// SPDX-License-Identifier: Apache-2.0
#pragma once

// Q8.8 symmetric fixed point.
//
// Activations and weights are 16-bit signed codes with value = code / 256.
// Products of two codes live at Q16.16 scale and are accumulated exactly in a
// 40-bit accumulator; `requantize` brings an accumulator back to Q8.8 with
// round-to-nearest-even and saturation. Real zero maps to code zero, which is
// what makes exact zero counting on quantized tensors possible.

#include <compare>
#include <cstdint>
#include <span>

#include "mimoloc/matrix.hpp"

namespace mimoloc::fxp {

inline constexpr int kFracBits = 8;
inline constexpr double kScale = 256.0;
inline constexpr std::int32_t kCodeMin = -32768;
inline constexpr std::int32_t kCodeMax = 32767;

/// Accumulator width in bits (sign included).
inline constexpr int kAccBits = 40;
inline constexpr std::int64_t kAccMax = (std::int64_t{1} << (kAccBits - 1)) - 1;
inline constexpr std::int64_t kAccMin = -(std::int64_t{1} << (kAccBits - 1));

struct QVal {
  std::int16_t code = 0;
  friend constexpr auto operator<=>(QVal, QVal) = default;
};
static_assert(sizeof(QVal) == sizeof(std::int16_t));

struct AccVal {
  std::int64_t code = 0;
  friend constexpr auto operator<=>(AccVal, AccVal) = default;
};

using QTensor = Matrix<QVal>;

constexpr QVal saturate(std::int64_t v) noexcept {
  if (v > kCodeMax) return QVal{static_cast<std::int16_t>(kCodeMax)};
  if (v < kCodeMin) return QVal{static_cast<std::int16_t>(kCodeMin)};
  return QVal{static_cast<std::int16_t>(v)};
}

/// Arithmetic right shift by `shift` bits, rounding ties to even.
constexpr std::int64_t round_shift(std::int64_t v, int shift) noexcept {
  if (shift <= 0) return v;
  const std::int64_t q = v >> shift;  // floor
  const std::int64_t rem = v - (q << shift);
  const std::int64_t half = std::int64_t{1} << (shift - 1);
  if (rem > half || (rem == half && (q & 1) != 0)) return q + 1;
  return q;
}

/// Round-to-nearest-even of x*256, saturated to the int16 range.
QVal quantize(double x) noexcept;

constexpr double dequantize(QVal q) noexcept { return q.code / kScale; }

/// Throws ContractViolation when `v` does not fit the 40-bit accumulator.
void check_accumulator(std::int64_t v);

/// acc + a*b at Q16.16 scale; overflow past 40 bits is a contract violation.
AccVal qmac(AccVal acc, QVal a, QVal b);

/// Shift right by 8 with ties-to-even, then saturate to Q8.8.
constexpr QVal requantize(AccVal acc) noexcept {
  return saturate(round_shift(acc.code, kFracBits));
}

/// Q8.8 value promoted to accumulator scale (exact).
constexpr AccVal widen(QVal q) noexcept {
  return AccVal{std::int64_t{q.code} << kFracBits};
}

constexpr QVal add_sat(QVal a, QVal b) noexcept {
  return saturate(std::int64_t{a.code} + b.code);
}

constexpr QVal mul(QVal a, QVal b) noexcept {
  return requantize(AccVal{std::int64_t{a.code} * b.code});
}

/// Multiplies a Q16.16 accumulator by a Q8.8 multiplier with a single
/// rounding back to Q8.8.
constexpr QVal rescale(AccVal acc, QVal multiplier) noexcept {
  return saturate(round_shift(acc.code * multiplier.code, 2 * kFracBits));
}

/// Exact dot product of two equal-length code vectors (SIMD dispatched).
/// The result must fit the accumulator.
AccVal dot(std::span<const QVal> a, std::span<const QVal> b);

QTensor quantize(const RealMatrix& m);
RealMatrix dequantize(const QTensor& q);

}  // namespace mimoloc::fxp
