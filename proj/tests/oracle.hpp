// SPDX-License-Identifier: Apache-2.0
#pragma once

// Independent reference implementations used only by the tests. Integer
// oracles use exact rational rounding written from scratch; matmuls are
// plain triple loops over the math-orientation weights.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "mimoloc/fxp.hpp"
#include "mimoloc/nn/activation.hpp"
#include "mimoloc/nn/bundle.hpp"
#include "mimoloc/sparsity.hpp"

namespace oracle {

using mimoloc::RealMatrix;
using mimoloc::fxp::QTensor;
using mimoloc::fxp::QVal;

inline std::int16_t sat16(std::int64_t v) {
  return static_cast<std::int16_t>(std::clamp<std::int64_t>(v, -32768, 32767));
}

/// v / 2^shift rounded to nearest, ties to even, via floor division and an
/// explicit remainder comparison.
inline std::int64_t div_pow2_even(std::int64_t v, int shift) {
  const std::int64_t d = std::int64_t{1} << shift;
  std::int64_t q = v / d;
  std::int64_t r = v % d;
  if (r < 0) {
    q -= 1;
    r += d;
  }
  const std::int64_t twice = 2 * r;
  if (twice > d || (twice == d && (q & 1) != 0)) ++q;
  return q;
}

inline QVal requantize(std::int64_t acc) { return QVal{sat16(div_pow2_even(acc, 8))}; }
inline QVal rescale(std::int64_t acc, QVal m) { return QVal{sat16(div_pow2_even(acc * m.code, 16))}; }

/// Exact value of code / 256 compared with nearest-even rounding of x * 256.
inline QVal quantize(double x) {
  const double s = x * 256.0;
  if (s >= 32767.0) return QVal{32767};
  if (s <= -32768.0) return QVal{-32768};
  const double f = std::floor(s);
  const double frac = s - f;
  auto q = static_cast<std::int64_t>(f);
  if (frac > 0.5 || (frac == 0.5 && (q & 1) != 0)) ++q;
  return QVal{sat16(q)};
}

inline QTensor quantize(const RealMatrix& m) {
  QTensor q(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) q.flat()[i] = quantize(m.flat()[i]);
  return q;
}

inline RealMatrix dequantize(const QTensor& q) {
  RealMatrix m(q.rows(), q.cols());
  for (std::size_t i = 0; i < q.size(); ++i) m.flat()[i] = q.flat()[i].code / 256.0;
  return m;
}

/// requantize(x * w + widen(b)) with w in math orientation (in x out).
inline QTensor matmul(const QTensor& x, const QTensor& w, const std::vector<QVal>& b = {}) {
  QTensor y(x.rows(), w.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) {
      std::int64_t acc = b.empty() ? 0 : std::int64_t{b[j].code} * 256;
      for (std::size_t k = 0; k < x.cols(); ++k) acc += std::int64_t{x(i, k).code} * w(k, j).code;
      y(i, j) = requantize(acc);
    }
  return y;
}

inline RealMatrix matmul(const RealMatrix& x, const RealMatrix& w, const std::vector<double>& b = {}) {
  RealMatrix y(x.rows(), w.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) {
      long double acc = b.empty() ? 0.0L : b[j];
      for (std::size_t k = 0; k < x.cols(); ++k) acc += static_cast<long double>(x(i, k)) * w(k, j);
      y(i, j) = static_cast<double>(acc);
    }
  return y;
}

inline std::vector<QVal> quantize(const std::vector<double>& v) {
  std::vector<QVal> q;
  for (double x : v) q.push_back(quantize(x));
  return q;
}

template <typename M>
M random_matrix(std::size_t r, std::size_t c, std::mt19937_64& g, double lo, double hi);

template <>
inline RealMatrix random_matrix<RealMatrix>(std::size_t r, std::size_t c, std::mt19937_64& g,
                                            double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  RealMatrix m(r, c);
  for (double& v : m.flat()) v = u(g);
  return m;
}

template <>
inline QTensor random_matrix<QTensor>(std::size_t r, std::size_t c, std::mt19937_64& g, double lo,
                                      double hi) {
  return quantize(random_matrix<RealMatrix>(r, c, g, lo, hi));
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& g, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(g);
  return v;
}

/// Encoder segment with arbitrary (toy) dimensions, weights on the Q8.8
/// grid so both engines see identical parameters.
inline mimoloc::nn::EncoderSegment random_segment(std::size_t d, std::size_t d_ff,
                                                  std::mt19937_64& g, double scale = 0.5) {
  auto grid = [&](std::size_t r, std::size_t c) {
    return oracle::dequantize(random_matrix<QTensor>(r, c, g, -scale, scale));
  };
  auto grid_vec = [&](std::size_t n) {
    auto m = grid(1, n);
    return std::vector<double>(m.flat().begin(), m.flat().end());
  };
  mimoloc::nn::EncoderSegment s;
  s.wq = grid(d, d);
  s.wk = grid(d, d);
  s.wv = grid(d, d);
  s.wo = grid(d, d);
  std::uniform_real_distribution<double> ug(0.5, 2.0);
  s.gamma = ug(g);
  s.w1 = grid(d, d_ff);
  s.b1 = grid_vec(d_ff);
  s.w2 = grid(d_ff, d);
  s.b2 = grid_vec(d);
  return s;
}

/// Integer activation of one score row restricted to `keys` (the kept
/// columns); other entries stay zero.
inline std::vector<QVal> activation_row(const std::vector<QVal>& scores,
                                        const std::vector<std::size_t>& keys,
                                        mimoloc::nn::ActivationKind kind, QVal bias) {
  std::vector<QVal> out(scores.size(), QVal{0});
  if (keys.empty()) return out;
  QTensor sub(1, keys.size());
  for (std::size_t j = 0; j < keys.size(); ++j) sub(0, j) = scores[keys[j]];
  const QTensor a = mimoloc::nn::activation(sub, kind, bias);
  for (std::size_t j = 0; j < keys.size(); ++j) out[keys[j]] = a(0, j);
  return out;
}

/// Mask-aware dense reference of one integer encoder layer: Q/K/V for every
/// row, attention over every query, but skipped rows take no part as keys
/// and their outputs are replaced by the residual input.
inline QTensor masked_encoder_layer(const QTensor& x, const mimoloc::nn::EncoderSegment& seg,
                                    std::size_t heads, const mimoloc::sparsity::RowMask& mask,
                                    mimoloc::nn::ActivationKind kind, QVal bias,
                                    bool ffn_residual) {
  const std::size_t n = x.rows(), d = x.cols(), dk = d / heads;
  const QTensor wq = quantize(seg.wq), wk = quantize(seg.wk), wv = quantize(seg.wv),
                wo = quantize(seg.wo), w1 = quantize(seg.w1), w2 = quantize(seg.w2);
  const auto b1 = quantize(seg.b1), b2 = quantize(seg.b2);
  const QVal scale = quantize(seg.gamma / std::sqrt(static_cast<double>(dk)));
  const QTensor q = matmul(x, wq), k = matmul(x, wk), v = matmul(x, wv);

  std::vector<std::size_t> keys;
  for (std::size_t j = 0; j < n; ++j)
    if (!mask.skip[j]) keys.push_back(j);

  QTensor concat(n, d);
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<QVal> s(n, QVal{0});
      for (std::size_t j = 0; j < n; ++j) {
        std::int64_t acc = 0;
        for (std::size_t c = 0; c < dk; ++c)
          acc += std::int64_t{q(i, h * dk + c).code} * k(j, h * dk + c).code;
        s[j] = rescale(acc, scale);
      }
      const auto a = activation_row(s, keys, kind, bias);
      for (std::size_t c = 0; c < dk; ++c) {
        std::int64_t acc = 0;
        for (std::size_t j = 0; j < n; ++j) acc += std::int64_t{a[j].code} * v(j, h * dk + c).code;
        concat(i, h * dk + c) = requantize(acc);
      }
    }
  }
  const QTensor proj = matmul(concat, wo);
  QTensor y(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c)
      y(i, c) = QVal{sat16(std::int64_t{x(i, c).code} + proj(i, c).code)};

  QTensor hidden = matmul(y, w1, b1);
  for (QVal& e : hidden.flat()) e.code = std::max<std::int16_t>(e.code, 0);
  const QTensor z = matmul(hidden, w2, b2);
  QTensor out(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) {
      if (mask.skip[i]) {
        out(i, c) = x(i, c);
      } else {
        const std::int64_t r = ffn_residual ? y(i, c).code : 0;
        out(i, c) = QVal{sat16(r + z(i, c).code)};
      }
    }
  return out;
}

}  // namespace oracle
