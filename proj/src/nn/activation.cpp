// SPDX-License-Identifier: Apache-2.0
#include "mimoloc/nn/activation.hpp"

#include <algorithm>
#include <cmath>

namespace mimoloc::nn {

namespace {

std::array<std::int16_t, kLutSize> build_sigmoid_table() {
  std::array<std::int16_t, kLutSize> t{};
  for (std::size_t i = 0; i < kLutSize; ++i)
    t[i] = fxp::quantize(sigmoid(kSigmoidLutMin + static_cast<double>(i) * kSigmoidLutStep)).code;
  return t;
}

std::array<std::uint16_t, kLutSize> build_exp_table() {
  std::array<std::uint16_t, kLutSize> t{};
  for (std::size_t i = 0; i < kLutSize; ++i)
    t[i] = static_cast<std::uint16_t>(
        std::nearbyint(std::exp(-static_cast<double>(i) * kExpLutStep) * kExpOne));
  return t;
}

}  // namespace

const std::array<std::int16_t, kLutSize>& sigmoid_table() {
  static const auto table = build_sigmoid_table();
  return table;
}

const std::array<std::uint16_t, kLutSize>& exp_table() {
  static const auto table = build_exp_table();
  return table;
}

fxp::QVal sigmoid_lut_eval(fxp::QVal x) noexcept {
  // Grid step 1/32 is 8 codes; index = round((x + 16) * 32), ties upward.
  const std::int32_t c = std::clamp<std::int32_t>(x.code, -4096, 4096);
  const auto idx = static_cast<std::size_t>((c + 4096 + 4) >> 3);
  return fxp::QVal{sigmoid_table()[idx]};
}

std::size_t exp_lut_index(std::int32_t offset_code) noexcept {
  // Step 1/64 is 4 codes; index = round(-offset / 4), ties upward.
  const std::int32_t neg = std::max<std::int32_t>(0, -offset_code);
  return std::min<std::size_t>(kLutSize - 1, static_cast<std::size_t>((neg + 2) >> 2));
}

std::vector<fxp::QVal> normalize_row_int(std::span<const std::int64_t> weights) {
  std::vector<fxp::QVal> out(weights.size());
  std::int64_t total = 0;
  for (std::int64_t w : weights) total += w;
  if (total <= 0) return out;
  // Output j is P_j - P_{j-1} with P_j = round(256 * prefix_j / total), so
  // the row telescopes to P_n = 256. The reciprocal carries 40 fractional
  // bits; its truncation error stays below 2^-10 codes for rows up to 2^22.
  constexpr int kRecipBits = 40;
  const std::int64_t recip = (std::int64_t{1} << kRecipBits) / total;
  const std::int64_t half = std::int64_t{1} << (kRecipBits - 1);
  std::int64_t prefix = 0;
  std::int64_t prev = 0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    prefix += weights[j];
    const std::int64_t p = (prefix * 256 * recip + half) >> kRecipBits;
    out[j] = fxp::QVal{static_cast<std::int16_t>(p - prev)};
    prev = p;
  }
  return out;
}

std::vector<fxp::QVal> softmax_int(std::span<const fxp::QVal> row) {
  expects(!row.empty(), "softmax_int: empty row");
  std::int32_t m = row[0].code;
  for (auto q : row) m = std::max<std::int32_t>(m, q.code);
  const auto& table = exp_table();
  std::vector<std::int64_t> e(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) e[j] = table[exp_lut_index(row[j].code - m)];
  return normalize_row_int(e);
}

double sigmoid(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<double> softmax(std::span<const double> row) {
  std::vector<double> out(row.size());
  if (row.empty()) return out;
  const double m = *std::max_element(row.begin(), row.end());
  double sum = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    out[j] = std::exp(row[j] - m);
    sum += out[j];
  }
  for (double& v : out) v /= sum;
  return out;
}

double sigmoid_bias(std::size_t n) noexcept { return -std::log(static_cast<double>(n)); }

RealMatrix activation(const RealMatrix& scores, const ActivationParams& p) {
  RealMatrix out(scores.rows(), scores.cols());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    auto in = scores.row(i);
    auto dst = out.row(i);
    switch (p.kind) {
      case ActivationKind::SoftmaxFloat:
      case ActivationKind::SoftmaxInt: {
        const auto s = softmax(in);
        std::copy(s.begin(), s.end(), dst.begin());
        break;
      }
      case ActivationKind::SigmoidLUT:
        for (std::size_t j = 0; j < in.size(); ++j) dst[j] = sigmoid(in[j]);
        break;
      case ActivationKind::SigmoidBiasLUT:
        for (std::size_t j = 0; j < in.size(); ++j) dst[j] = sigmoid(in[j] + p.bias);
        break;
      case ActivationKind::SigmoidNormLUT: {
        double sum = 0.0;
        for (std::size_t j = 0; j < in.size(); ++j) sum += dst[j] = sigmoid(in[j]);
        for (double& v : dst) v /= sum;
        break;
      }
    }
  }
  return out;
}

fxp::QTensor activation(const fxp::QTensor& scores, ActivationKind kind, fxp::QVal bias) {
  fxp::QTensor out(scores.rows(), scores.cols());
  std::vector<std::int64_t> w(scores.cols());
  std::vector<double> real(scores.cols());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    auto in = scores.row(i);
    auto dst = out.row(i);
    switch (kind) {
      case ActivationKind::SoftmaxFloat: {
        for (std::size_t j = 0; j < in.size(); ++j) real[j] = fxp::dequantize(in[j]);
        const auto s = softmax(real);
        for (std::size_t j = 0; j < in.size(); ++j) dst[j] = fxp::quantize(s[j]);
        break;
      }
      case ActivationKind::SoftmaxInt: {
        const auto s = softmax_int(in);
        std::copy(s.begin(), s.end(), dst.begin());
        break;
      }
      case ActivationKind::SigmoidLUT:
        for (std::size_t j = 0; j < in.size(); ++j) dst[j] = sigmoid_lut_eval(in[j]);
        break;
      case ActivationKind::SigmoidBiasLUT:
        for (std::size_t j = 0; j < in.size(); ++j)
          dst[j] = sigmoid_lut_eval(fxp::add_sat(in[j], bias));
        break;
      case ActivationKind::SigmoidNormLUT: {
        for (std::size_t j = 0; j < in.size(); ++j) w[j] = sigmoid_lut_eval(in[j]).code;
        const auto s = normalize_row_int(std::span<const std::int64_t>(w.data(), in.size()));
        std::copy(s.begin(), s.end(), dst.begin());
        break;
      }
    }
  }
  return out;
}

}  // namespace mimoloc::nn
