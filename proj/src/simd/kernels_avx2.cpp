// SPDX-License-Identifier: Apache-2.0
//
// AVX2 variants. This translation unit is compiled with -mavx2 and only
// called after a runtime CPU check.
#include <immintrin.h>

#include <bit>

#include "mimoloc/simd.hpp"

namespace mimoloc::simd::avx2 {

namespace {

inline std::int64_t hsum_epi64(__m256i v) {
  const __m128i lo = _mm256_castsi256_si128(v);
  const __m128i hi = _mm256_extracti128_si256(v, 1);
  const __m128i s = _mm_add_epi64(lo, hi);
  return _mm_cvtsi128_si64(s) + _mm_extract_epi64(s, 1);
}

inline double hsum_pd(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}

}  // namespace

std::int64_t dot_i16(const std::int16_t* a, const std::int16_t* b, std::size_t n) {
  // madd_epi16 is exact except for (-32768)^2 + (-32768)^2 = 2^31, which
  // wraps to INT32_MIN. No other pair sum can produce INT32_MIN, so those
  // lanes are corrected by +2^32 after widening.
  const __m256i wrap = _mm256_set1_epi32(INT32_MIN);
  const __m256i fix = _mm256_set1_epi64x(std::int64_t{1} << 32);
  __m256i acc = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
    const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
    const __m256i m = _mm256_madd_epi16(va, vb);
    const __m256i w = _mm256_cmpeq_epi32(m, wrap);
    const __m256i m_lo = _mm256_cvtepi32_epi64(_mm256_castsi256_si128(m));
    const __m256i m_hi = _mm256_cvtepi32_epi64(_mm256_extracti128_si256(m, 1));
    const __m256i w_lo = _mm256_and_si256(_mm256_cvtepi32_epi64(_mm256_castsi256_si128(w)), fix);
    const __m256i w_hi =
        _mm256_and_si256(_mm256_cvtepi32_epi64(_mm256_extracti128_si256(w, 1)), fix);
    acc = _mm256_add_epi64(acc, _mm256_add_epi64(m_lo, m_hi));
    acc = _mm256_add_epi64(acc, _mm256_add_epi64(w_lo, w_hi));
  }
  std::int64_t sum = hsum_epi64(acc);
  for (; i < n; ++i) sum += std::int64_t{a[i]} * b[i];
  return sum;
}

double dot_f64(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    acc1 = _mm256_add_pd(acc1,
                         _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
  }
  double sum = hsum_pd(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

std::size_t threshold_i16(std::int16_t* row, std::size_t n, std::int16_t t) {
  const __m256i vt = _mm256_set1_epi16(t);
  const __m256i zero = _mm256_setzero_si256();
  std::size_t zeros = 0;
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    auto* p = reinterpret_cast<__m256i*>(row + i);
    __m256i v = _mm256_loadu_si256(p);
    const __m256i below = _mm256_cmpgt_epi16(vt, v);
    v = _mm256_andnot_si256(below, v);
    _mm256_storeu_si256(p, v);
    const auto eq = static_cast<unsigned>(_mm256_movemask_epi8(_mm256_cmpeq_epi16(v, zero)));
    zeros += static_cast<std::size_t>(std::popcount(eq)) / 2;
  }
  for (; i < n; ++i) {
    if (row[i] < t) row[i] = 0;
    zeros += row[i] == 0;
  }
  return zeros;
}

std::size_t threshold_f64(double* row, std::size_t n, double t) {
  const __m256d vt = _mm256_set1_pd(t);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t zeros = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(row + i);
    const __m256d below = _mm256_cmp_pd(v, vt, _CMP_LT_OQ);
    v = _mm256_andnot_pd(below, v);
    _mm256_storeu_pd(row + i, v);
    const auto eq = static_cast<unsigned>(_mm256_movemask_pd(_mm256_cmp_pd(v, zero, _CMP_EQ_OQ)));
    zeros += static_cast<std::size_t>(std::popcount(eq));
  }
  for (; i < n; ++i) {
    if (row[i] < t) row[i] = 0.0;
    zeros += row[i] == 0.0;
  }
  return zeros;
}

std::size_t count_zeros_i16(const std::int16_t* row, std::size_t n) {
  const __m256i zero = _mm256_setzero_si256();
  std::size_t zeros = 0;
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(row + i));
    const auto eq = static_cast<unsigned>(_mm256_movemask_epi8(_mm256_cmpeq_epi16(v, zero)));
    zeros += static_cast<std::size_t>(std::popcount(eq)) / 2;
  }
  for (; i < n; ++i) zeros += row[i] == 0;
  return zeros;
}

}  // namespace mimoloc::simd::avx2
