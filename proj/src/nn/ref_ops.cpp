// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "mimoloc/nn/engine.hpp"
#include "mimoloc/simd.hpp"

namespace mimoloc::nn::ref {

namespace {

RealMatrix gather_rows(const RealMatrix& x, std::span<const std::size_t> rows) {
  RealMatrix out(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) std::ranges::copy(x.row(rows[i]), out.row(i).begin());
  return out;
}

}  // namespace

Segment prepare(const EncoderSegment& s, std::size_t heads) {
  Segment p;
  p.wq_t = s.wq.transposed();
  p.wk_t = s.wk.transposed();
  p.wv_t = s.wv.transposed();
  p.wo_t = s.wo.transposed();
  p.heads = heads;
  const auto d_k = static_cast<double>(s.wq.cols() / heads);
  p.scale = s.gamma / std::sqrt(d_k);
  p.w1_t = s.w1.transposed();
  p.b1 = s.b1;
  p.w2_t = s.w2.transposed();
  p.b2 = s.b2;
  return p;
}

Fcnn prepare(const FcnnParams& f) {
  return Fcnn{f.w1.transposed(), f.b1, f.w2.transposed(), f.b2, kLeakySlope};
}

Slp prepare(const SlpParams& s) { return Slp{s.w, s.b}; }

std::array<double, 3> slp_logits(const Slp& slp, std::span<const double> x) {
  expects(slp.w.rows() == 3 && slp.w.cols() == x.size(), "slp_logits: dimension mismatch");
  std::array<double, 3> y{};
  for (std::size_t c = 0; c < 3; ++c) y[c] = simd::dot_f64(slp.w.row(c), x) + slp.b[c];
  return y;
}

RealMatrix linear(const RealMatrix& x, const RealMatrix& w_t, std::span<const double> bias) {
  expects(x.cols() == w_t.cols(), "linear: inner dimension mismatch");
  expects(bias.empty() || bias.size() == w_t.rows(), "linear: bias length mismatch");
  RealMatrix out(x.rows(), w_t.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t c = 0; c < w_t.rows(); ++c)
      out(i, c) = simd::dot_f64(x.row(i), w_t.row(c)) + (bias.empty() ? 0.0 : bias[c]);
  return out;
}

Qkv qkv_project(const RealMatrix& x, const Segment& seg) {
  return Qkv{linear(x, seg.wq_t), linear(x, seg.wk_t), linear(x, seg.wv_t)};
}

RealMatrix head_slice(const RealMatrix& m, std::size_t head, std::size_t heads) {
  expects(heads > 0 && m.cols() % heads == 0 && head < heads, "head_slice: bad head split");
  const std::size_t w = m.cols() / heads;
  RealMatrix out(m.rows(), w);
  for (std::size_t i = 0; i < m.rows(); ++i)
    std::copy_n(m.row(i).begin() + static_cast<std::ptrdiff_t>(head * w), w, out.row(i).begin());
  return out;
}

RealMatrix attention_scores(const RealMatrix& qh, const RealMatrix& kh, double scale) {
  expects(qh.cols() == kh.cols(), "attention_scores: head width mismatch");
  RealMatrix s(qh.rows(), kh.rows());
  for (std::size_t i = 0; i < qh.rows(); ++i)
    for (std::size_t j = 0; j < kh.rows(); ++j) s(i, j) = scale * simd::dot_f64(qh.row(i), kh.row(j));
  return s;
}

RealMatrix head_output(const RealMatrix& a, const RealMatrix& vh) {
  expects(a.cols() == vh.rows(), "head_output: dimension mismatch");
  return linear(a, vh.transposed());
}

RealMatrix mha(const RealMatrix& x, const Segment& seg, const RowMask& mask,
               const ActivationParams& act) {
  expects(mask.rows() == x.rows(), "mha: mask length != token count");
  RealMatrix out = x;
  const auto kept = mask.kept_rows();
  if (kept.empty()) return out;
  const RealMatrix xk = gather_rows(x, kept);
  const Qkv qkv = qkv_project(xk, seg);

  const std::size_t width = x.cols() / seg.heads;
  RealMatrix concat(kept.size(), x.cols());
  for (std::size_t h = 0; h < seg.heads; ++h) {
    const RealMatrix s =
        attention_scores(head_slice(qkv.q, h, seg.heads), head_slice(qkv.k, h, seg.heads), seg.scale);
    const RealMatrix ho = head_output(activation(s, act), head_slice(qkv.v, h, seg.heads));
    for (std::size_t i = 0; i < ho.rows(); ++i)
      std::ranges::copy(ho.row(i), concat.row(i).begin() + static_cast<std::ptrdiff_t>(h * width));
  }
  const RealMatrix proj = linear(concat, seg.wo_t);
  for (std::size_t i = 0; i < kept.size(); ++i)
    for (std::size_t c = 0; c < x.cols(); ++c) out(kept[i], c) += proj(i, c);
  return out;
}

RealMatrix ffn(const RealMatrix& x, const Segment& seg) {
  RealMatrix hidden = linear(x, seg.w1_t, seg.b1);
  for (double& v : hidden.flat()) v = std::max(v, 0.0);
  return linear(hidden, seg.w2_t, seg.b2);
}

RealMatrix encoder_layer(const RealMatrix& x, const Segment& seg, const RowMask& mask,
                         const ActivationParams& act, bool ffn_residual) {
  RealMatrix y = mha(x, seg, mask, act);
  const auto kept = mask.kept_rows();
  if (kept.empty()) return y;
  const RealMatrix yk = gather_rows(y, kept);
  const RealMatrix z = ffn(yk, seg);
  for (std::size_t i = 0; i < kept.size(); ++i)
    for (std::size_t c = 0; c < y.cols(); ++c)
      y(kept[i], c) = z(i, c) + (ffn_residual ? yk(i, c) : 0.0);
  return y;
}

std::vector<double> maxpool_flatten(const RealMatrix& x, std::size_t k, std::size_t p) {
  expects(k > 0 && (x.cols() + p) % k == 0, "maxpool_flatten: (d + p) not divisible by k");
  const std::size_t width = (x.cols() + p) / k;
  std::vector<double> out;
  out.reserve(x.rows() * width);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    for (std::size_t w = 0; w < width; ++w) {
      double m = -INFINITY;
      for (std::size_t j = w * k; j < (w + 1) * k; ++j) m = std::max(m, j < row.size() ? row[j] : 0.0);
      out.push_back(m);
    }
  }
  return out;
}

Coord fcnn(std::span<const double> v, const Fcnn& f) {
  expects(v.size() == f.w1_t.cols(), "fcnn: input length mismatch");
  std::vector<double> hidden(f.w1_t.rows());
  for (std::size_t j = 0; j < hidden.size(); ++j) {
    const double z = simd::dot_f64(v, f.w1_t.row(j)) + f.b1[j];
    hidden[j] = z >= 0.0 ? z : f.slope * z;
  }
  return Coord{simd::dot_f64(hidden, f.w2_t.row(0)) + f.b2[0],
               simd::dot_f64(hidden, f.w2_t.row(1)) + f.b2[1]};
}

}  // namespace mimoloc::nn::ref
