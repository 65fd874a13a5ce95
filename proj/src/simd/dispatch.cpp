// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <cstdlib>
#include <string>

#include "mimoloc/errors.hpp"
#include "mimoloc/simd.hpp"

namespace mimoloc::simd {

namespace {

struct Kernels {
  std::int64_t (*dot_i16)(const std::int16_t*, const std::int16_t*, std::size_t);
  double (*dot_f64)(const double*, const double*, std::size_t);
  std::size_t (*threshold_i16)(std::int16_t*, std::size_t, std::int16_t);
  std::size_t (*threshold_f64)(double*, std::size_t, double);
  std::size_t (*count_zeros_i16)(const std::int16_t*, std::size_t);
};

constexpr Kernels kScalar{scalar::dot_i16, scalar::dot_f64, scalar::threshold_i16,
                          scalar::threshold_f64, scalar::count_zeros_i16};
#if defined(MIMOLOC_HAVE_AVX2)
constexpr Kernels kAvx2{avx2::dot_i16, avx2::dot_f64, avx2::threshold_i16, avx2::threshold_f64,
                        avx2::count_zeros_i16};
#endif
#if defined(MIMOLOC_HAVE_NEON)
constexpr Kernels kNeon{neon::dot_i16, neon::dot_f64, neon::threshold_i16, neon::threshold_f64,
                        neon::count_zeros_i16};
#endif

const Kernels& table_for(Isa isa) {
  switch (isa) {
#if defined(MIMOLOC_HAVE_AVX2)
    case Isa::Avx2:
      return kAvx2;
#endif
#if defined(MIMOLOC_HAVE_NEON)
    case Isa::Neon:
      return kNeon;
#endif
    default:
      return kScalar;
  }
}

Isa initial_isa() {
  Isa isa = detected_isa();
  if (const char* env = std::getenv("MIMOLOC_ISA")) {
    const std::string want(env);
    for (Isa cand : {Isa::Scalar, Isa::Avx2, Isa::Neon})
      if (want == to_string(cand) && isa_supported(cand)) isa = cand;
  }
  return isa;
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

const Kernels& kernels() { return table_for(active().load(std::memory_order_relaxed)); }

}  // namespace

std::string_view to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
    case Isa::Scalar:
      break;
  }
  return "scalar";
}

bool isa_supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(MIMOLOC_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(MIMOLOC_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa detected_isa() noexcept {
  if (isa_supported(Isa::Avx2)) return Isa::Avx2;
  if (isa_supported(Isa::Neon)) return Isa::Neon;
  return Isa::Scalar;
}

Isa active_isa() noexcept { return active().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
  if (!isa_supported(isa))
    throw ConfigError("SIMD variant '" + std::string(to_string(isa)) + "' is not available");
  active().store(isa, std::memory_order_relaxed);
}

std::int64_t dot_i16(std::span<const std::int16_t> a, std::span<const std::int16_t> b) {
  expects(a.size() == b.size(), "dot_i16: length mismatch");
  return kernels().dot_i16(a.data(), b.data(), a.size());
}

double dot_f64(std::span<const double> a, std::span<const double> b) {
  expects(a.size() == b.size(), "dot_f64: length mismatch");
  return kernels().dot_f64(a.data(), b.data(), a.size());
}

std::size_t threshold_i16(std::span<std::int16_t> row, std::int16_t t) {
  return kernels().threshold_i16(row.data(), row.size(), t);
}

std::size_t threshold_f64(std::span<double> row, double t) {
  return kernels().threshold_f64(row.data(), row.size(), t);
}

std::size_t count_zeros_i16(std::span<const std::int16_t> row) {
  return kernels().count_zeros_i16(row.data(), row.size());
}

}  // namespace mimoloc::simd
