// SPDX-License-Identifier: Apache-2.0
// Acceptance gate: one line per criterion, nonzero exit if any fails.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "mimoloc/chansim.hpp"
#include "mimoloc/fxp.hpp"
#include "mimoloc/nn/activation.hpp"
#include "mimoloc/nn/engine.hpp"
#include "mimoloc/nn/router.hpp"
#include "mimoloc/perf.hpp"
#include "mimoloc/sparsity.hpp"
#include "oracle.hpp"

using namespace mimoloc;
using namespace mimoloc::nn;
using fxp::QTensor;
using fxp::QVal;
using sparsity::RowMask;
using sparsity::SparsityConfig;

namespace {

// Coordinate RMS bound for criterion 10: first measured run gave 0.02327;
// frozen at 1.5x as a regression bound.
constexpr double kCoordRmsBound = 0.035;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_++ < 5) notes_ += (notes_.empty() ? "" : "; ") + what;
  }
  Outcome done(std::string detail) const {
    if (failures_ > 0) detail += " | failures=" + std::to_string(failures_) + ": " + notes_;
    return {failures_ == 0, detail};
  }

 private:
  std::size_t failures_ = 0;
  std::string notes_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double max_abs(const RealMatrix& a, const RealMatrix& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.flat()[i] - b.flat()[i]));
  return m;
}

RowMask mask_from_bits(std::size_t n, std::uint64_t bits) {
  std::vector<std::uint8_t> skip(n);
  for (std::size_t i = 0; i < n; ++i) skip[i] = (bits >> i) & 1u;
  return RowMask::from_skip(std::move(skip));
}

// --- 1 ----------------------------------------------------------------------
Outcome fixed_point() {
  const auto t0 = std::chrono::steady_clock::now();
  Checker c;
  for (int code = -32768; code <= 32767; ++code) {
    const QVal q{static_cast<std::int16_t>(code)};
    if (fxp::quantize(fxp::dequantize(q)) != q) c.expect(false, "round trip code " + std::to_string(code));
  }
  c.expect(fxp::quantize(0.0).code == 0, "quantize(0)");
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u(-140.0, 140.0);
  for (int i = 0; i < 1000000; ++i) {
    double a = u(g), b = u(g);
    if (a > b) std::swap(a, b);
    if (fxp::quantize(a).code > fxp::quantize(b).code) c.expect(false, "monotonicity");
  }
  const double s = seconds_since(t0);
  c.expect(s < 5.0, "runtime");
  return c.done("65536 codes round-trip, 1e6 monotone pairs, " + fmt("%.2f s", s));
}

// --- 2 ----------------------------------------------------------------------
Outcome sigmoid_lut() {
  const auto t0 = std::chrono::steady_clock::now();
  Checker c;
  double worst = 0;
  for (int code = -16 * 256; code <= 16 * 256; ++code) {
    const QVal x{static_cast<std::int16_t>(code)};
    const double want = 1.0 / (1.0 + std::exp(-fxp::dequantize(x)));
    worst = std::max(worst, std::abs(fxp::dequantize(sigmoid_lut_eval(x)) - want));
  }
  c.expect(worst <= 1.0 / 128.0, "max error " + fmt("%.6g", worst));
  c.expect(sigmoid_lut_eval(QVal{0}).code == 128, "sigmoid(0) code");
  const double s = seconds_since(t0);
  c.expect(s < 1.0, "runtime");
  return c.done("max |LUT - sigma| = " + fmt("%.6g", worst) + " (bound 2^-7), " + fmt("%.3f s", s));
}

// --- 3 ----------------------------------------------------------------------
Outcome integer_softmax() {
  Checker c;
  std::mt19937_64 g(3);
  std::uniform_int_distribution<std::size_t> ulen(2, 128);
  std::uniform_int_distribution<int> ucode(-3000, 3000), ushift(-2000, 2000);
  int worst_sum = 0;
  for (int t = 0; t < 10000; ++t) {
    std::vector<QVal> row(ulen(g));
    for (auto& v : row) v = QVal{static_cast<std::int16_t>(ucode(g))};
    const auto a = softmax_int(row);
    int sum = 0;
    for (QVal v : a) sum += v.code;
    worst_sum = std::max(worst_sum, std::abs(sum - 256));
    const int sh = ushift(g);
    auto shifted = row;
    for (auto& v : shifted) v.code = static_cast<std::int16_t>(v.code + sh);
    if (softmax_int(shifted) != a) c.expect(false, "shift invariance");
  }
  c.expect(worst_sum <= 1, "row sum off by " + std::to_string(worst_sum) + " codes");

  std::uniform_real_distribution<double> us(-20.0, 20.0);
  double worst = 0;
  for (int t = 0; t < 10000; ++t) {
    std::vector<double> row(ulen(g));
    for (double& v : row) v = us(g);
    const auto a = softmax(row);
    const long double m = *std::max_element(row.begin(), row.end());
    long double den = 0;
    for (double v : row) den += std::exp(static_cast<long double>(v) - m);
    for (std::size_t i = 0; i < row.size(); ++i)
      worst = std::max(worst, std::abs(a[i] - static_cast<double>(std::exp(static_cast<long double>(row[i]) - m) / den)));
  }
  c.expect(worst <= 1e-12, "float softmax error " + fmt("%.3g", worst));
  return c.done("10^4 rows: max |sum-1| = " + std::to_string(worst_sum) + "/256, shift-invariant; float err " +
                fmt("%.3g", worst));
}

// --- 4 ----------------------------------------------------------------------
Outcome biased_sigmoid() {
  Checker c;
  const double n = 128;
  const QTensor a = activation(QTensor(1, 128, QVal{0}), ActivationKind::SigmoidBiasLUT, fxp::quantize(sigmoid_bias(128)));
  double sum = 0, worst = 0;
  for (QVal v : a.flat()) {
    worst = std::max(worst, std::abs(fxp::dequantize(v) - 1.0 / (n + 1)));
    sum += fxp::dequantize(v);
  }
  c.expect(worst <= 1.0 / 128.0, "per-element error");
  c.expect(std::abs(sum - n / (n + 1)) <= 0.01 * n / (n + 1), "row sum " + fmt("%.6f", sum));
  const RealMatrix f = activation(RealMatrix(1, 128, 0.0), ActivationParams{ActivationKind::SigmoidBiasLUT, sigmoid_bias(128)});
  double fsum = 0;
  for (double v : f.flat()) fsum += v;
  c.expect(std::abs(fsum - n / (n + 1)) <= 1e-12, "float row sum");
  return c.done("int row sum " + fmt("%.6f", sum) + ", float " + fmt("%.6f", fsum) + ", n/(n+1) = " +
                fmt("%.6f", n / (n + 1)));
}

// --- 5 ----------------------------------------------------------------------
Outcome mask_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  Checker c;
  std::mt19937_64 g(5);
  std::size_t cases = 0;
  {
    const auto seg = oracle::random_segment(4, 6, g, 0.75);
    const auto p = fixed::prepare(seg, 2);
    const QTensor x = oracle::random_matrix<QTensor>(8, 4, g, -2, 2);
    const QVal bias = fxp::quantize(sigmoid_bias(8));
    for (auto kind : {ActivationKind::SigmoidBiasLUT, ActivationKind::SoftmaxInt, ActivationKind::SigmoidNormLUT})
      for (std::uint64_t bits = 0; bits < 256; ++bits) {
        const RowMask m = mask_from_bits(8, bits);
        ++cases;
        if (fixed::encoder_layer(x, p, m, kind, bias) != oracle::masked_encoder_layer(x, seg, 2, m, kind, bias, false))
          c.expect(false, "n=8 mask " + std::to_string(bits));
      }
  }
  {
    const auto seg = oracle::random_segment(46, 64, g, 0.25);
    const auto p = fixed::prepare(seg, 2);
    const QTensor x = oracle::random_matrix<QTensor>(128, 46, g, 0, 1);
    const QVal bias = fxp::quantize(sigmoid_bias(128));
    std::uniform_real_distribution<double> frac(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
      const double pskip = frac(g);
      std::bernoulli_distribution coin(pskip);
      std::vector<std::uint8_t> skip(128);
      for (auto& s : skip) s = coin(g);
      const RowMask m = RowMask::from_skip(skip);
      ++cases;
      if (fixed::encoder_layer(x, p, m, ActivationKind::SigmoidBiasLUT, bias) !=
          oracle::masked_encoder_layer(x, seg, 2, m, ActivationKind::SigmoidBiasLUT, bias, false))
        c.expect(false, "n=128 mask " + std::to_string(t));
    }
  }
  const double s = seconds_since(t0);
  c.expect(s < 60.0, "runtime");
  return c.done(std::to_string(cases) + " masks bit-exact, " + fmt("%.2f s", s));
}

// --- 6 ----------------------------------------------------------------------
Outcome matmul_oracles() {
  Checker c;
  std::mt19937_64 g(6);
  std::uniform_int_distribution<std::size_t> un(1, 9);
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = un(g), d = 2 * un(g), d_ff = un(g), dk = d / 2;
    const auto seg = oracle::random_segment(d, d_ff, g, 0.5);
    const auto qp = fixed::prepare(seg, 2);
    const auto rp = ref::prepare(seg, 2);
    const QTensor xq = oracle::random_matrix<QTensor>(n, d, g, -2, 2);
    const RealMatrix xr = oracle::random_matrix<RealMatrix>(n, d, g, -2, 2);

    // qkv
    const auto q = fixed::qkv_project(xq, qp);
    c.expect(q.q == oracle::matmul(xq, oracle::quantize(seg.wq)) && q.k == oracle::matmul(xq, oracle::quantize(seg.wk)) &&
                 q.v == oracle::matmul(xq, oracle::quantize(seg.wv)),
             "int qkv");
    const auto r = ref::qkv_project(xr, rp);
    worst = std::max({worst, max_abs(r.q, oracle::matmul(xr, seg.wq)), max_abs(r.k, oracle::matmul(xr, seg.wk)),
                      max_abs(r.v, oracle::matmul(xr, seg.wv))});

    // scores
    const QTensor qh = fixed::head_slice(q.q, 0, 2), kh = fixed::head_slice(q.k, 0, 2);
    const QTensor s = fixed::attention_scores(qh, kh, qp.scale);
    const RealMatrix rqh = ref::head_slice(r.q, 0, 2), rkh = ref::head_slice(r.k, 0, 2);
    const RealMatrix rs = ref::attention_scores(rqh, rkh, rp.scale);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        std::int64_t acc = 0;
        long double dot = 0;
        for (std::size_t k = 0; k < dk; ++k) {
          acc += std::int64_t{qh(i, k).code} * kh(j, k).code;
          dot += static_cast<long double>(rqh(i, k)) * rkh(j, k);
        }
        c.expect(s(i, j) == oracle::rescale(acc, qp.scale), "int scores");
        worst = std::max(worst, std::abs(rs(i, j) - static_cast<double>(seg.gamma * dot / std::sqrt(static_cast<long double>(dk)))));
      }

    // head
    const QTensor aq = oracle::random_matrix<QTensor>(n, n, g, 0, 1);
    c.expect(fixed::head_output(aq, fixed::head_slice(q.v, 1, 2)) == oracle::matmul(aq, fixed::head_slice(q.v, 1, 2)), "int head");
    const RealMatrix ar = oracle::random_matrix<RealMatrix>(n, n, g, 0, 1);
    worst = std::max(worst, max_abs(ref::head_output(ar, ref::head_slice(r.v, 1, 2)), oracle::matmul(ar, ref::head_slice(r.v, 1, 2))));

    // ffn
    QTensor hq = oracle::matmul(xq, oracle::quantize(seg.w1), oracle::quantize(seg.b1));
    for (QVal& v : hq.flat()) v.code = std::max<std::int16_t>(v.code, 0);
    c.expect(fixed::ffn(xq, qp) == oracle::matmul(hq, oracle::quantize(seg.w2), oracle::quantize(seg.b2)), "int ffn");
    RealMatrix hr = oracle::matmul(xr, seg.w1, seg.b1);
    for (double& v : hr.flat()) v = std::max(v, 0.0);
    worst = std::max(worst, max_abs(ref::ffn(xr, rp), oracle::matmul(hr, seg.w2, seg.b2)));

    // fcnn
    const std::size_t flat = 3 * un(g), dh = un(g);
    FcnnParams f{oracle::random_matrix<RealMatrix>(flat, dh, g, -0.5, 0.5), oracle::random_vector(dh, g, -0.5, 0.5),
                 oracle::random_matrix<RealMatrix>(dh, 2, g, -0.5, 0.5), oracle::random_vector(2, g, -0.5, 0.5)};
    const QTensor vq = oracle::random_matrix<QTensor>(1, flat, g, -2, 2);
    QTensor fh = oracle::matmul(vq, oracle::quantize(f.w1), oracle::quantize(f.b1));
    for (QVal& z : fh.flat())
      if (z.code < 0) z = oracle::requantize(std::int64_t{z.code} * 77);
    const QTensor fo = oracle::matmul(fh, oracle::quantize(f.w2), oracle::quantize(f.b2));
    const auto got = fixed::fcnn(vq.flat(), fixed::prepare(f));
    c.expect(got[0] == fo(0, 0) && got[1] == fo(0, 1), "int fcnn");
    const std::vector<double> vr = oracle::random_vector(flat, g, -2, 2);
    RealMatrix rh = oracle::matmul(RealMatrix(1, flat, vr), f.w1, f.b1);
    for (double& z : rh.flat()) z = z < 0 ? 0.3 * z : z;
    const RealMatrix ro = oracle::matmul(rh, f.w2, f.b2);
    const Coord rc = ref::fcnn(vr, ref::prepare(f));
    worst = std::max({worst, std::abs(rc.x - ro(0, 0)), std::abs(rc.y - ro(0, 1))});
  }
  c.expect(worst <= 1e-12, "float error " + fmt("%.3g", worst));
  return c.done("100 toy instances x {qkv, scores, head, ffn, fcnn}: int bit-exact, float max err " + fmt("%.3g", worst));
}

// --- 7 ----------------------------------------------------------------------
Outcome router() {
  Checker c;
  std::size_t sequences = 0;
  for (std::size_t w = 1; w <= 7; ++w) {
    std::size_t total = 1;
    for (std::size_t i = 0; i < w + 2; ++i) total *= 3;
    for (int initial = 0; initial < 3; ++initial)
      for (std::size_t code = 0; code < total; ++code) {
        RouterState st(w, static_cast<Scenario>(initial));
        std::deque<int> win(w, initial);
        int current = initial;
        std::size_t rest = code;
        for (std::size_t step = 0; step < w + 2; ++step) {
          const int label = static_cast<int>(rest % 3);
          rest /= 3;
          win.pop_front();
          win.push_back(label);
          std::array<int, 3> cnt{};
          for (int l : win) ++cnt[l];
          const int best = *std::max_element(cnt.begin(), cnt.end());
          if (std::count(cnt.begin(), cnt.end(), best) == 1)
            current = static_cast<int>(std::find(cnt.begin(), cnt.end(), best) - cnt.begin());
          if (static_cast<int>(st.push(static_cast<Scenario>(label))) != current)
            c.expect(false, "W=" + std::to_string(w) + " seq " + std::to_string(code));
        }
        ++sequences;
      }
    RouterState flip(w, Scenario::S1);
    for (std::size_t k = 1; k <= w; ++k)
      if ((flip.push(Scenario::S3) == Scenario::S3) != (k >= w / 2 + 1)) c.expect(false, "switch W=" + std::to_string(w));
  }
  return c.done(std::to_string(sequences) + " label sequences (W = 1..7, 3 initial selections), switch at floor(W/2)+1");
}

// --- 8 ----------------------------------------------------------------------
Outcome sparsity_logic() {
  Checker c;
  std::mt19937_64 g(8);
  std::exponential_distribution<double> e(30.0);
  std::uniform_real_distribution<double> ut(0.0, 0.1);
  std::uniform_int_distribution<std::size_t> ur(0, 45);
  for (int t = 0; t < 1000; ++t) {
    RealMatrix x(128, 46);
    for (double& v : x.flat()) v = e(g);
    double t1 = ut(g), t2 = ut(g);
    if (t1 > t2) std::swap(t1, t2);
    std::size_t r1 = ur(g), r2 = ur(g);
    if (r1 > r2) std::swap(r1, r2);
    const RealMatrix th = sparsity::threshold_elements(x, t1);
    c.expect(sparsity::threshold_elements(th, t1) == th, "float idempotence");
    const QTensor qth = sparsity::threshold_elements(fxp::quantize(x), t1);
    c.expect(sparsity::threshold_elements(qth, t1) == qth, "int idempotence");
    const RowMask lo = sparsity::detect(x, {t1, r1}).mask;
    const RowMask hi_e = sparsity::detect(x, {t2, r1}).mask;
    const RowMask hi_r = sparsity::detect(x, {t1, r2}).mask;
    for (std::size_t i = 0; i < 128; ++i) {
      if (lo.skip[i] && !hi_e.skip[i]) c.expect(false, "T_e superset");
      if (hi_r.skip[i] && !lo.skip[i]) c.expect(false, "T_r superset");
    }
  }
  for (std::size_t tr = 0; tr <= 45; ++tr) {
    RealMatrix m(2, 46, 1.0);
    for (std::size_t j = 0; j < tr; ++j) m(0, j) = 0.0;
    for (std::size_t j = 0; j <= tr; ++j) m(1, j) = 0.0;
    const RowMask mask = sparsity::build_row_mask(m, {0.0, tr});
    c.expect(mask.skip[0] == 0 && mask.skip[1] == 1, "boundary T_r=" + std::to_string(tr));
  }
  return c.done("1000 random matrices: idempotent, superset-monotone in T_e and T_r; Z=T_r kept, Z=T_r+1 skipped");
}

// --- 9 ----------------------------------------------------------------------
Outcome calibration() {
  Checker c;
  const auto& p = perf::calibrated_defaults();
  const auto dense = perf::pipeline_report(RowMask::dense(128), Scenario::S1, ActivationKind::SigmoidBiasLUT, p);
  c.expect(std::abs(dense.total_cycles - 106000.0) <= 0.30 * 106000.0, "dense cycles");
  const auto sh = perf::stage_share(dense);
  c.expect(std::abs(sh.mha - 0.80) <= 0.10 && std::abs(sh.ffn - 0.15) <= 0.10 && std::abs(sh.fcnn - 0.05) <= 0.10,
           "stage shares");
  const auto sp = perf::pipeline_report(0.65, Scenario::S1, ActivationKind::SigmoidBiasLUT, p);
  c.expect(sp.speedup >= 1.7 && sp.speedup <= 3.0, "speedup at 65%");
  for (Scenario s : kScenarios) {
    double prev = 0;
    for (std::size_t k = 0; k <= 128; ++k) {
      const auto r = perf::pipeline_report(static_cast<double>(k) / 128.0, s, ActivationKind::SigmoidBiasLUT, p);
      if (r.speedup < prev) c.expect(false, "speedup not monotone");
      prev = r.speedup;
    }
  }
  const double tp = perf::throughput_from_latency(0.51e-3);
  c.expect(std::abs(std::round(tp) - 1961.0) <= 1.0, "throughput");
  return c.done("dense S1 " + fmt("%.0f cycles", dense.total_cycles) + ", shares " + fmt("%.3f", sh.mha) + "/" +
                fmt("%.3f", sh.ffn) + "/" + fmt("%.3f", sh.fcnn) + ", speedup@65% " + fmt("%.3f", sp.speedup) +
                ", 0.51 ms -> " + fmt("%.1f pos/s", tp));
}

// --- 10 ---------------------------------------------------------------------
struct Drift {
  std::array<double, 12> worst{};  // per op, in units of 2^-9
  std::array<int, 12> k{1, 1, 3, 1, 1, 0, 1, 1, 0, 2, 1, 0};
  static constexpr std::array<const char*, 12> names{"qkv", "scores", "sigmoid", "head", "wo", "residual",
                                                     "ffn1", "ffn2", "maxpool", "fcnn1", "fcnn2", "slp"};
  void add(std::size_t op, double err) { worst[op] = std::max(worst[op], err * 512.0); }
};

void drift_layer(const QTensor& x, const fixed::Segment& qs, const RowMask& mask, QVal bias, Drift& d) {
  const ref::Segment rs = fixed::mirror(qs);
  const auto kept = mask.kept_rows();
  if (kept.empty()) return;
  QTensor xk(kept.size(), x.cols());
  for (std::size_t i = 0; i < kept.size(); ++i) std::ranges::copy(x.row(kept[i]), xk.row(i).begin());
  const auto q = fixed::qkv_project(xk, qs);
  const auto r = ref::qkv_project(fxp::dequantize(xk), rs);
  d.add(0, std::max({max_abs(fxp::dequantize(q.q), r.q), max_abs(fxp::dequantize(q.k), r.k),
                     max_abs(fxp::dequantize(q.v), r.v)}));
  const ActivationParams act{ActivationKind::SigmoidBiasLUT, fxp::dequantize(bias)};
  QTensor concat(kept.size(), x.cols());
  for (std::size_t h = 0; h < qs.heads; ++h) {
    const QTensor qh = fixed::head_slice(q.q, h, qs.heads), kh = fixed::head_slice(q.k, h, qs.heads),
                  vh = fixed::head_slice(q.v, h, qs.heads);
    const QTensor s = fixed::attention_scores(qh, kh, qs.scale);
    d.add(1, max_abs(fxp::dequantize(s), ref::attention_scores(fxp::dequantize(qh), fxp::dequantize(kh), rs.scale)));
    const QTensor a = activation(s, ActivationKind::SigmoidBiasLUT, bias);
    d.add(2, max_abs(fxp::dequantize(a), activation(fxp::dequantize(s), act)));
    const QTensor ho = fixed::head_output(a, vh);
    d.add(3, max_abs(fxp::dequantize(ho), ref::head_output(fxp::dequantize(a), fxp::dequantize(vh))));
    for (std::size_t i = 0; i < ho.rows(); ++i)
      std::ranges::copy(ho.row(i), concat.row(i).begin() + static_cast<std::ptrdiff_t>(h * ho.cols()));
  }
  const QTensor proj = fixed::linear(concat, qs.wo_t);
  d.add(4, max_abs(fxp::dequantize(proj), ref::linear(fxp::dequantize(concat), rs.wo_t)));
  QTensor y(kept.size(), x.cols());
  for (std::size_t i = 0; i < y.size(); ++i) y.flat()[i] = fxp::add_sat(xk.flat()[i], proj.flat()[i]);
  RealMatrix yr(kept.size(), x.cols());
  for (std::size_t i = 0; i < y.size(); ++i) yr.flat()[i] = fxp::dequantize(xk.flat()[i]) + fxp::dequantize(proj.flat()[i]);
  d.add(5, max_abs(fxp::dequantize(y), yr));
  QTensor h1 = fixed::linear(y, qs.w1_t, qs.b1);
  RealMatrix h1r = ref::linear(fxp::dequantize(y), rs.w1_t, rs.b1);
  d.add(6, max_abs(fxp::dequantize(h1), h1r));
  for (QVal& v : h1.flat()) v = std::max(v, QVal{0});
  const QTensor z = fixed::linear(h1, qs.w2_t, qs.b2);
  d.add(7, max_abs(fxp::dequantize(z), ref::linear(fxp::dequantize(h1), rs.w2_t, rs.b2)));
}

Outcome dual_engine() {
  Checker c;
  cli::RunConfig cfg;
  cfg.segments = {{Scenario::S1, 34}, {Scenario::S2, 33}, {Scenario::S3, 33}};
  cfg.generate_seed = 2024;
  std::vector<Scenario> labels;
  const auto snaps = cli::generate_snapshots(cfg, &labels);
  const ModelBundle bundle = snap_to_q8_8(random_bundle(ModelHeader{}, 7, 0.25));
  const IntegerEngine ie(bundle);
  const ReferenceEngine re(bundle);
  Drift d;
  double sq = 0;
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    const Scenario s = labels[i];
    // per-operation drift along the integer execution, sparsity on in layer 1
    auto det = sparsity::detect(fxp::quantize(snaps[i]), cfg.sparsity[index_of(s)]);
    QTensor x = det.thresholded;
    {
      std::vector<QVal> col(128);
      for (std::size_t r = 0; r < 128; ++r) col[r] = x(r, 0);
      const auto li = fixed::slp_logits(ie.slp(), col);
      const auto lr = ref::slp_logits(fixed::mirror(ie.slp()), fxp::dequantize(QTensor(1, 128, col)).values());
      for (std::size_t k = 0; k < 3; ++k) d.add(11, std::abs(static_cast<double>(li[k].code) / 65536.0 - lr[k]));
    }
    for (std::size_t l = 0; l < encoder_layers(s); ++l) {
      const RowMask m = l == 0 ? det.mask : RowMask::dense(128);
      const auto& seg = ie.segment(segment_for(s, l));
      drift_layer(x, seg, m, ie.bias(), d);
      x = fixed::encoder_layer(x, seg, m, ActivationKind::SigmoidBiasLUT, ie.bias());
    }
    const auto flat = fixed::maxpool_flatten(x, 4, 2);
    const auto flat_r = ref::maxpool_flatten(fxp::dequantize(x), 4, 2);
    for (std::size_t k = 0; k < flat.size(); ++k) d.add(8, std::abs(fxp::dequantize(flat[k]) - flat_r[k]));
    const auto& fq = ie.fcnn(s);
    const ref::Fcnn fr = fixed::mirror(fq);
    const QTensor v(1, flat.size(), flat);
    QTensor hid = fixed::linear(v, fq.w1_t, fq.b1);
    for (QVal& z : hid.flat()) z = z.code >= 0 ? z : fxp::mul(z, fq.slope);
    RealMatrix hid_r = ref::linear(fxp::dequantize(v), fr.w1_t, fr.b1);
    for (double& z : hid_r.flat()) z = z >= 0 ? z : fr.slope * z;
    d.add(9, max_abs(fxp::dequantize(hid), hid_r));
    const QTensor out = fixed::linear(hid, fq.w2_t, fq.b2);
    d.add(10, max_abs(fxp::dequantize(out), ref::linear(fxp::dequantize(hid), fr.w2_t, fr.b2)));
    const auto direct = fixed::fcnn(flat, fq);
    c.expect(direct[0] == out(0, 0) && direct[1] == out(0, 1), "fcnn decomposition");

    // coordinate drift between the engines, dense
    const Coord a = ie.run(snaps[i], s, nullptr).coord;
    const Coord b = re.run(snaps[i], s, nullptr).coord;
    sq += (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y);
  }
  const double rms = std::sqrt(sq / static_cast<double>(snaps.size()));
  std::string detail = "per-op max/bound (x2^-9):";
  constexpr double eps = 1e-6;  // float rounding of the mirror, in units of 2^-9
  for (std::size_t op = 0; op < d.worst.size(); ++op) {
    detail += std::string(" ") + Drift::names[op] + "=" + fmt("%.3g", d.worst[op]) + "/" + std::to_string(d.k[op]);
    c.expect(d.worst[op] <= d.k[op] + eps, std::string(Drift::names[op]) + " drift");
  }
  detail += "; coordinate RMS " + fmt("%.4g", rms) + " (bound " + fmt("%.4g", kCoordRmsBound) + ")";
  c.expect(rms <= kCoordRmsBound, "coordinate RMS");
  return c.done(detail);
}

// --- 11 ---------------------------------------------------------------------
Outcome determinism() {
  Checker c;
  const auto dir = std::filesystem::temp_directory_path() / "mimoloc_acceptance";
  std::filesystem::create_directories(dir);
  cli::RunConfig cfg;
  cfg.segments = {{Scenario::S1, 10}, {Scenario::S2, 10}, {Scenario::S3, 10}};
  cfg.engine = cli::EngineChoice::Both;
  const auto fp = dir / "fp.bin";
  {
    std::ofstream os(fp, std::ios::binary);
    std::ostringstream side;
    cli::cmd_generate(cfg, os, side);
  }
  cfg.fingerprints = fp.string();
  std::ostringstream a, b;
  cli::cmd_infer(cfg, a);
  cli::cmd_infer(cfg, b);
  c.expect(a.str() == b.str(), "outputs differ");
  c.expect(a.str().size() > 0, "empty output");
  return c.done("two cmd_infer runs on 30 snapshots: " + std::to_string(a.str().size()) + " bytes, identical");
}

}  // namespace

int main() {
  const std::array<std::pair<const char*, std::function<Outcome()>>, 11> criteria{{
      {"fixed-point soundness", fixed_point},
      {"sigmoid LUT fidelity", sigmoid_lut},
      {"integer softmax", integer_softmax},
      {"biased sigmoid anchor", biased_sigmoid},
      {"mask-aware oracle equivalence", mask_equivalence},
      {"matmul oracles", matmul_oracles},
      {"router behaviour", router},
      {"sparsity logic", sparsity_logic},
      {"cycle-model calibration", calibration},
      {"dual-engine drift", dual_engine},
      {"end-to-end determinism", determinism},
  }};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("[%s] %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
