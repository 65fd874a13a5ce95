// SPDX-License-Identifier: Apache-2.0
#include "mimoloc/fxp.hpp"

#include <cmath>
#include <string>

#include "mimoloc/simd.hpp"

namespace mimoloc::fxp {

namespace {

std::span<const std::int16_t> codes(std::span<const QVal> v) noexcept {
  return {reinterpret_cast<const std::int16_t*>(v.data()), v.size()};
}

}  // namespace

QVal quantize(double x) noexcept {
  const double scaled = x * kScale;
  if (!(scaled < kCodeMax)) return QVal{static_cast<std::int16_t>(kCodeMax)};
  if (!(scaled > kCodeMin)) return QVal{static_cast<std::int16_t>(kCodeMin)};
  // nearbyint honours the default rounding mode: ties to even.
  return saturate(static_cast<std::int64_t>(std::nearbyint(scaled)));
}

void check_accumulator(std::int64_t v) {
  if (v > kAccMax || v < kAccMin)
    throw ContractViolation("accumulator overflow: " + std::to_string(v) + " exceeds " +
                            std::to_string(kAccBits) + " bits");
}

AccVal qmac(AccVal acc, QVal a, QVal b) {
  const std::int64_t next = acc.code + std::int64_t{a.code} * b.code;
  check_accumulator(next);
  return AccVal{next};
}

AccVal dot(std::span<const QVal> a, std::span<const QVal> b) {
  const std::int64_t v = simd::dot_i16(codes(a), codes(b));
  check_accumulator(v);
  return AccVal{v};
}

QTensor quantize(const RealMatrix& m) {
  QTensor q(m.rows(), m.cols());
  auto src = m.flat();
  auto dst = q.flat();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = quantize(src[i]);
  return q;
}

RealMatrix dequantize(const QTensor& q) {
  RealMatrix m(q.rows(), q.cols());
  auto src = q.flat();
  auto dst = m.flat();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = dequantize(src[i]);
  return m;
}

}  // namespace mimoloc::fxp
