// SPDX-License-Identifier: Apache-2.0
#pragma once

// Attention activations. The float functions are the reference; the
// integer ones are what the Q8.8 engine executes:
//
//   sigmoid      1025-entry LUT over [-16, 16], step 1/32, Q8.8 samples
//   softmax      max subtraction, 1025-entry exp LUT over [-16, 0] with step
//                1/64 and Q1.15 samples, one reciprocal per row
//   normalise    prefix-sum rounding, so a normalised row sums to exactly
//                1.0 (256 codes) whenever its weights are not all zero

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "mimoloc/fxp.hpp"
#include "mimoloc/nn/bundle.hpp"

namespace mimoloc::nn {

// --- LUTs ---------------------------------------------------------------

inline constexpr std::size_t kLutSize = 1025;
inline constexpr double kSigmoidLutMin = -16.0;
inline constexpr double kSigmoidLutStep = 1.0 / 32.0;
inline constexpr double kExpLutStep = 1.0 / 64.0;
inline constexpr std::int32_t kExpOne = 1 << 15;  // Q1.15 one

/// Q8.8 samples of the logistic function at -16 + i/32.
const std::array<std::int16_t, kLutSize>& sigmoid_table();
/// Q1.15 samples of exp(-i/64), stored unsigned (entry 0 is 32768).
const std::array<std::uint16_t, kLutSize>& exp_table();

/// Clamp to [-16, 16], nearest grid index (ties upward), stored sample.
fxp::QVal sigmoid_lut_eval(fxp::QVal x) noexcept;
/// Index into exp_table() for a non-positive Q8.8 offset from the row max.
std::size_t exp_lut_index(std::int32_t offset_code) noexcept;

/// Splits 256 codes across `weights` in proportion, using prefix-sum
/// rounding with one reciprocal per row. All-zero weights give all zeros.
std::vector<fxp::QVal> normalize_row_int(std::span<const std::int64_t> weights);

/// Integer softmax of one row of Q8.8 scores. Shift invariant by
/// construction: only code differences to the row maximum are used.
std::vector<fxp::QVal> softmax_int(std::span<const fxp::QVal> row);

// --- reference (double) ---------------------------------------------------

double sigmoid(double x) noexcept;
std::vector<double> softmax(std::span<const double> row);

/// Bias for the biased sigmoid: -ln(n).
double sigmoid_bias(std::size_t n) noexcept;

struct ActivationParams {
  ActivationKind kind = ActivationKind::SigmoidBiasLUT;
  /// Added before the sigmoid for SigmoidBiasLUT. Defaults to -ln(128).
  double bias = -4.852030263919617;
};

/// Row-wise activation of a score matrix (reference arithmetic; sigmoid
/// kinds use the exact logistic function).
RealMatrix activation(const RealMatrix& scores, const ActivationParams& p);

/// Integer activation. SoftmaxFloat here means a float softmax on the
/// dequantised row, quantised back (a mixed-precision reference point).
fxp::QTensor activation(const fxp::QTensor& scores, ActivationKind kind, fxp::QVal bias);

}  // namespace mimoloc::nn
