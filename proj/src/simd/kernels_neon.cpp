// SPDX-License-Identifier: Apache-2.0
//
// NEON variants (AArch64 only; NEON is part of the base ISA there).
#include <arm_neon.h>

#include "mimoloc/simd.hpp"

namespace mimoloc::simd::neon {

std::int64_t dot_i16(const std::int16_t* a, const std::int16_t* b, std::size_t n) {
  int64x2_t acc = vdupq_n_s64(0);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const int16x8_t va = vld1q_s16(a + i);
    const int16x8_t vb = vld1q_s16(b + i);
    // vmull_s16 products are exact in 32 bits; pairwise widen before adding.
    acc = vpadalq_s32(acc, vmull_s16(vget_low_s16(va), vget_low_s16(vb)));
    acc = vpadalq_s32(acc, vmull_high_s16(va, vb));
  }
  std::int64_t sum = vaddvq_s64(acc);
  for (; i < n; ++i) sum += std::int64_t{a[i]} * b[i];
  return sum;
}

double dot_f64(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vaddq_f64(acc0, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    acc1 = vaddq_f64(acc1, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
  }
  double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

std::size_t threshold_i16(std::int16_t* row, std::size_t n, std::int16_t t) {
  const int16x8_t vt = vdupq_n_s16(t);
  std::size_t zeros = 0;
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    int16x8_t v = vld1q_s16(row + i);
    const uint16x8_t below = vcltq_s16(v, vt);
    v = vbicq_s16(v, vreinterpretq_s16_u16(below));
    vst1q_s16(row + i, v);
    const uint16x8_t eq = vceqzq_s16(v);
    zeros += vaddvq_u16(vshrq_n_u16(eq, 15));
  }
  for (; i < n; ++i) {
    if (row[i] < t) row[i] = 0;
    zeros += row[i] == 0;
  }
  return zeros;
}

std::size_t threshold_f64(double* row, std::size_t n, double t) {
  const float64x2_t vt = vdupq_n_f64(t);
  std::size_t zeros = 0;
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t v = vld1q_f64(row + i);
    const uint64x2_t below = vcltq_f64(v, vt);
    v = vreinterpretq_f64_u64(vbicq_u64(vreinterpretq_u64_f64(v), below));
    vst1q_f64(row + i, v);
    const uint64x2_t eq = vceqzq_f64(v);
    zeros += static_cast<std::size_t>(vaddvq_u64(vshrq_n_u64(eq, 63)));
  }
  for (; i < n; ++i) {
    if (row[i] < t) row[i] = 0.0;
    zeros += row[i] == 0.0;
  }
  return zeros;
}

std::size_t count_zeros_i16(const std::int16_t* row, std::size_t n) {
  std::size_t zeros = 0;
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const uint16x8_t eq = vceqzq_s16(vld1q_s16(row + i));
    zeros += vaddvq_u16(vshrq_n_u16(eq, 15));
  }
  for (; i < n; ++i) zeros += row[i] == 0;
  return zeros;
}

}  // namespace mimoloc::simd::neon
