// SPDX-License-Identifier: Apache-2.0
#pragma once

// Inner-loop kernels with a scalar reference implementation and SIMD
// variants (AVX2 on x86-64, NEON on AArch64). The variant is picked once at
// startup from CPU features; MIMOLOC_ISA=scalar|avx2|neon in the environment
// or set_isa() overrides it. All integer kernels are bit-exact across
// variants. The double-precision dot product differs only in summation
// order.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace mimoloc::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa) noexcept;
bool isa_supported(Isa isa) noexcept;
/// Best variant available on this CPU and build.
Isa detected_isa() noexcept;
Isa active_isa() noexcept;
/// Throws ConfigError when `isa` is not available.
void set_isa(Isa isa);

/// Exact sum of a[i]*b[i] (int16 x int16, accumulated in int64).
std::int64_t dot_i16(std::span<const std::int16_t> a, std::span<const std::int16_t> b);
double dot_f64(std::span<const double> a, std::span<const double> b);

/// Zeroes every element strictly below `t` in place and returns how many
/// elements of the row are zero afterwards.
std::size_t threshold_i16(std::span<std::int16_t> row, std::int16_t t);
std::size_t threshold_f64(std::span<double> row, double t);

std::size_t count_zeros_i16(std::span<const std::int16_t> row);

// Per-variant entry points, exposed for equivalence tests.
namespace scalar {
std::int64_t dot_i16(const std::int16_t* a, const std::int16_t* b, std::size_t n);
double dot_f64(const double* a, const double* b, std::size_t n);
std::size_t threshold_i16(std::int16_t* row, std::size_t n, std::int16_t t);
std::size_t threshold_f64(double* row, std::size_t n, double t);
std::size_t count_zeros_i16(const std::int16_t* row, std::size_t n);
}  // namespace scalar

namespace avx2 {
std::int64_t dot_i16(const std::int16_t* a, const std::int16_t* b, std::size_t n);
double dot_f64(const double* a, const double* b, std::size_t n);
std::size_t threshold_i16(std::int16_t* row, std::size_t n, std::int16_t t);
std::size_t threshold_f64(double* row, std::size_t n, double t);
std::size_t count_zeros_i16(const std::int16_t* row, std::size_t n);
}  // namespace avx2

namespace neon {
std::int64_t dot_i16(const std::int16_t* a, const std::int16_t* b, std::size_t n);
double dot_f64(const double* a, const double* b, std::size_t n);
std::size_t threshold_i16(std::int16_t* row, std::size_t n, std::int16_t t);
std::size_t threshold_f64(double* row, std::size_t n, double t);
std::size_t count_zeros_i16(const std::int16_t* row, std::size_t n);
}  // namespace neon

}  // namespace mimoloc::simd
