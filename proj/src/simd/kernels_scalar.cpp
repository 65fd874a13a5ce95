// SPDX-License-Identifier: Apache-2.0
#include "mimoloc/simd.hpp"

namespace mimoloc::simd::scalar {

std::int64_t dot_i16(const std::int16_t* a, const std::int16_t* b, std::size_t n) {
  std::int64_t acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += std::int64_t{a[i]} * b[i];
  return acc;
}

double dot_f64(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

std::size_t threshold_i16(std::int16_t* row, std::size_t n, std::int16_t t) {
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (row[i] < t) row[i] = 0;
    zeros += row[i] == 0;
  }
  return zeros;
}

std::size_t threshold_f64(double* row, std::size_t n, double t) {
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (row[i] < t) row[i] = 0.0;
    zeros += row[i] == 0.0;
  }
  return zeros;
}

std::size_t count_zeros_i16(const std::int16_t* row, std::size_t n) {
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < n; ++i) zeros += row[i] == 0;
  return zeros;
}

}  // namespace mimoloc::simd::scalar
