// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "mimoloc/nn/engine.hpp"

namespace mimoloc::nn::fixed {

namespace {

QTensor gather_rows(const QTensor& x, std::span<const std::size_t> rows) {
  QTensor out(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) std::ranges::copy(x.row(rows[i]), out.row(i).begin());
  return out;
}

std::vector<QVal> quantize_vec(const std::vector<double>& v) {
  std::vector<QVal> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = fxp::quantize(v[i]);
  return out;
}

std::vector<double> dequantize_vec(const std::vector<QVal>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = fxp::dequantize(v[i]);
  return out;
}

}  // namespace

Segment prepare(const EncoderSegment& s, std::size_t heads) {
  Segment p;
  p.wq_t = fxp::quantize(s.wq.transposed());
  p.wk_t = fxp::quantize(s.wk.transposed());
  p.wv_t = fxp::quantize(s.wv.transposed());
  p.wo_t = fxp::quantize(s.wo.transposed());
  p.heads = heads;
  const auto d_k = static_cast<double>(s.wq.cols() / heads);
  p.scale = fxp::quantize(s.gamma / std::sqrt(d_k));
  p.w1_t = fxp::quantize(s.w1.transposed());
  p.b1 = quantize_vec(s.b1);
  p.w2_t = fxp::quantize(s.w2.transposed());
  p.b2 = quantize_vec(s.b2);
  return p;
}

Fcnn prepare(const FcnnParams& f) {
  return Fcnn{fxp::quantize(f.w1.transposed()), quantize_vec(f.b1),
              fxp::quantize(f.w2.transposed()), quantize_vec(f.b2), kLeakySlopeQ};
}

Slp prepare(const SlpParams& s) { return Slp{fxp::quantize(s.w), quantize_vec(s.b)}; }

ref::Segment mirror(const Segment& s) {
  ref::Segment r;
  r.wq_t = fxp::dequantize(s.wq_t);
  r.wk_t = fxp::dequantize(s.wk_t);
  r.wv_t = fxp::dequantize(s.wv_t);
  r.wo_t = fxp::dequantize(s.wo_t);
  r.scale = fxp::dequantize(s.scale);
  r.w1_t = fxp::dequantize(s.w1_t);
  r.b1 = dequantize_vec(s.b1);
  r.w2_t = fxp::dequantize(s.w2_t);
  r.b2 = dequantize_vec(s.b2);
  r.heads = s.heads;
  return r;
}

ref::Fcnn mirror(const Fcnn& f) {
  return ref::Fcnn{fxp::dequantize(f.w1_t), dequantize_vec(f.b1), fxp::dequantize(f.w2_t),
                   dequantize_vec(f.b2), fxp::dequantize(f.slope)};
}

ref::Slp mirror(const Slp& s) { return ref::Slp{fxp::dequantize(s.w), dequantize_vec(s.b)}; }

std::array<fxp::AccVal, 3> slp_logits(const Slp& slp, std::span<const QVal> x) {
  expects(slp.w.rows() == 3 && slp.w.cols() == x.size(), "slp_logits: dimension mismatch");
  std::array<fxp::AccVal, 3> y{};
  for (std::size_t c = 0; c < 3; ++c) {
    const std::int64_t v = fxp::dot(slp.w.row(c), x).code + fxp::widen(slp.b[c]).code;
    fxp::check_accumulator(v);
    y[c] = fxp::AccVal{v};
  }
  return y;
}

QTensor linear(const QTensor& x, const QTensor& w_t, std::span<const QVal> bias) {
  expects(x.cols() == w_t.cols(), "linear: inner dimension mismatch");
  expects(bias.empty() || bias.size() == w_t.rows(), "linear: bias length mismatch");
  QTensor out(x.rows(), w_t.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t c = 0; c < w_t.rows(); ++c) {
      std::int64_t acc = fxp::dot(x.row(i), w_t.row(c)).code;
      if (!bias.empty()) acc += fxp::widen(bias[c]).code;
      fxp::check_accumulator(acc);
      out(i, c) = fxp::requantize(fxp::AccVal{acc});
    }
  }
  return out;
}

Qkv qkv_project(const QTensor& x, const Segment& seg) {
  return Qkv{linear(x, seg.wq_t), linear(x, seg.wk_t), linear(x, seg.wv_t)};
}

QTensor head_slice(const QTensor& m, std::size_t head, std::size_t heads) {
  expects(heads > 0 && m.cols() % heads == 0 && head < heads, "head_slice: bad head split");
  const std::size_t w = m.cols() / heads;
  QTensor out(m.rows(), w);
  for (std::size_t i = 0; i < m.rows(); ++i)
    std::copy_n(m.row(i).begin() + static_cast<std::ptrdiff_t>(head * w), w, out.row(i).begin());
  return out;
}

QTensor attention_scores(const QTensor& qh, const QTensor& kh, QVal scale) {
  expects(qh.cols() == kh.cols(), "attention_scores: head width mismatch");
  QTensor s(qh.rows(), kh.rows());
  for (std::size_t i = 0; i < qh.rows(); ++i)
    for (std::size_t j = 0; j < kh.rows(); ++j)
      s(i, j) = fxp::rescale(fxp::dot(qh.row(i), kh.row(j)), scale);
  return s;
}

QTensor head_output(const QTensor& a, const QTensor& vh) {
  expects(a.cols() == vh.rows(), "head_output: dimension mismatch");
  // Output stationary: each output element accumulates over all value rows
  // before one requantize, same as a plain matmul.
  return linear(a, vh.transposed());
}

QTensor mha(const QTensor& x, const Segment& seg, const RowMask& mask, ActivationKind kind,
            QVal bias) {
  expects(mask.rows() == x.rows(), "mha: mask length != token count");
  QTensor out = x;
  const auto kept = mask.kept_rows();
  if (kept.empty()) return out;
  const QTensor xk = gather_rows(x, kept);
  const Qkv qkv = qkv_project(xk, seg);

  const std::size_t width = x.cols() / seg.heads;
  QTensor concat(kept.size(), x.cols());
  for (std::size_t h = 0; h < seg.heads; ++h) {
    const QTensor s =
        attention_scores(head_slice(qkv.q, h, seg.heads), head_slice(qkv.k, h, seg.heads), seg.scale);
    const QTensor ho = head_output(activation(s, kind, bias), head_slice(qkv.v, h, seg.heads));
    for (std::size_t i = 0; i < ho.rows(); ++i)
      std::ranges::copy(ho.row(i), concat.row(i).begin() + static_cast<std::ptrdiff_t>(h * width));
  }
  const QTensor proj = linear(concat, seg.wo_t);
  for (std::size_t i = 0; i < kept.size(); ++i)
    for (std::size_t c = 0; c < x.cols(); ++c)
      out(kept[i], c) = fxp::add_sat(x(kept[i], c), proj(i, c));
  return out;
}

QTensor ffn(const QTensor& x, const Segment& seg) {
  QTensor hidden = linear(x, seg.w1_t, seg.b1);
  for (QVal& v : hidden.flat()) v = std::max(v, QVal{0});
  return linear(hidden, seg.w2_t, seg.b2);
}

QTensor encoder_layer(const QTensor& x, const Segment& seg, const RowMask& mask,
                      ActivationKind kind, QVal bias, bool ffn_residual) {
  QTensor y = mha(x, seg, mask, kind, bias);
  const auto kept = mask.kept_rows();
  if (kept.empty()) return y;
  const QTensor yk = gather_rows(y, kept);
  const QTensor z = ffn(yk, seg);
  for (std::size_t i = 0; i < kept.size(); ++i)
    for (std::size_t c = 0; c < y.cols(); ++c)
      y(kept[i], c) = ffn_residual ? fxp::add_sat(z(i, c), yk(i, c)) : z(i, c);
  return y;
}

std::vector<QVal> maxpool_flatten(const QTensor& x, std::size_t k, std::size_t p) {
  expects(k > 0 && (x.cols() + p) % k == 0, "maxpool_flatten: (d + p) not divisible by k");
  const std::size_t width = (x.cols() + p) / k;
  std::vector<QVal> out;
  out.reserve(x.rows() * width);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    for (std::size_t w = 0; w < width; ++w) {
      QVal m{static_cast<std::int16_t>(fxp::kCodeMin)};
      for (std::size_t j = w * k; j < (w + 1) * k; ++j) m = std::max(m, j < row.size() ? row[j] : QVal{0});
      out.push_back(m);
    }
  }
  return out;
}

std::array<QVal, 2> fcnn(std::span<const QVal> v, const Fcnn& f) {
  expects(v.size() == f.w1_t.cols(), "fcnn: input length mismatch");
  std::vector<QVal> hidden(f.w1_t.rows());
  for (std::size_t j = 0; j < hidden.size(); ++j) {
    const std::int64_t acc = fxp::dot(v, f.w1_t.row(j)).code + fxp::widen(f.b1[j]).code;
    fxp::check_accumulator(acc);
    const QVal z = fxp::requantize(fxp::AccVal{acc});
    hidden[j] = z.code >= 0 ? z : fxp::mul(z, f.slope);
  }
  std::array<QVal, 2> out{};
  for (std::size_t c = 0; c < 2; ++c) {
    const std::int64_t acc = fxp::dot(hidden, f.w2_t.row(c)).code + fxp::widen(f.b2[c]).code;
    fxp::check_accumulator(acc);
    out[c] = fxp::requantize(fxp::AccVal{acc});
  }
  return out;
}

}  // namespace mimoloc::nn::fixed
