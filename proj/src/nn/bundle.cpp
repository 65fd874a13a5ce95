// SPDX-License-Identifier: Apache-2.0
#include "mimoloc/nn/bundle.hpp"

#include <fstream>

#include "../binio.hpp"
#include "mimoloc/errors.hpp"
#include "mimoloc/fxp.hpp"
#include "mimoloc/rng.hpp"

namespace mimoloc::nn {

namespace {

void check_shape(const RealMatrix& m, std::size_t rows, std::size_t cols, const std::string& what) {
  if (m.rows() != rows || m.cols() != cols)
    throw ConfigError("bundle: " + what + " is " + std::to_string(m.rows()) + "x" +
                      std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                      std::to_string(cols));
}

void check_len(const std::vector<double>& v, std::size_t len, const std::string& what) {
  if (v.size() != len)
    throw ConfigError("bundle: " + what + " has length " + std::to_string(v.size()) +
                      ", expected " + std::to_string(len));
}

RealMatrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double s) {
  RealMatrix m(rows, cols);
  for (double& v : m.flat()) v = rng.uniform(-s, s);
  return m;
}

std::vector<double> random_vector(Rng& rng, std::size_t n, double s) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-s, s);
  return v;
}

double snap(double v) { return fxp::dequantize(fxp::quantize(v)); }

RealMatrix snap(const RealMatrix& m) {
  RealMatrix out = m;
  for (double& v : out.flat()) v = snap(v);
  return out;
}

std::vector<double> snap(const std::vector<double>& v) {
  std::vector<double> out = v;
  for (double& x : out) x = snap(x);
  return out;
}

// --- file I/O -------------------------------------------------------------

constexpr char kMagic[5] = "AXLW";

void write_matrix(std::ostream& os, const RealMatrix& m, bool transposed, Precision prec) {
  binio::write_u32(os, static_cast<std::uint32_t>(m.rows()));
  binio::write_u32(os, static_cast<std::uint32_t>(m.cols()));
  binio::write_u32(os, transposed ? 1u : 0u);
  const RealMatrix stored = transposed ? m.transposed() : m;
  for (double v : stored.flat()) {
    if (prec == Precision::Int16)
      binio::write_i16(os, fxp::quantize(v).code);
    else
      binio::write_f32(os, static_cast<float>(v));
  }
}

void write_vector(std::ostream& os, const std::vector<double>& v, Precision prec) {
  write_matrix(os, RealMatrix(1, v.size(), v), false, prec);
}

RealMatrix read_matrix(std::istream& is, Precision prec) {
  const std::uint32_t rows = binio::read_u32(is, "matrix rows");
  const std::uint32_t cols = binio::read_u32(is, "matrix cols");
  const std::uint32_t transposed = binio::read_u32(is, "matrix transpose flag");
  if (transposed > 1) throw IoError("bundle: invalid transpose flag");
  if (std::uint64_t{rows} * cols > (std::uint64_t{1} << 26))
    throw IoError("bundle: matrix too large");
  const std::size_t srows = transposed ? cols : rows;
  const std::size_t scols = transposed ? rows : cols;
  RealMatrix stored(srows, scols);
  for (double& v : stored.flat()) {
    if (prec == Precision::Int16)
      v = fxp::dequantize(fxp::QVal{binio::read_i16(is, "matrix values")});
    else
      v = static_cast<double>(binio::read_f32(is, "matrix values"));
  }
  return transposed ? stored.transposed() : stored;
}

std::vector<double> read_vector(std::istream& is, Precision prec) {
  RealMatrix m = read_matrix(is, prec);
  if (m.rows() > 1 && m.cols() > 1) throw IoError("bundle: expected a vector");
  return m.values();
}

}  // namespace

std::string_view to_string(ActivationKind k) noexcept {
  switch (k) {
    case ActivationKind::SoftmaxFloat:
      return "SoftmaxFloat";
    case ActivationKind::SoftmaxInt:
      return "SoftmaxInt";
    case ActivationKind::SigmoidLUT:
      return "SigmoidLUT";
    case ActivationKind::SigmoidBiasLUT:
      return "SigmoidBiasLUT";
    case ActivationKind::SigmoidNormLUT:
      return "SigmoidNormLUT";
  }
  return "?";
}

ActivationKind parse_activation(std::string_view s) {
  for (auto k : {ActivationKind::SoftmaxFloat, ActivationKind::SoftmaxInt,
                 ActivationKind::SigmoidLUT, ActivationKind::SigmoidBiasLUT,
                 ActivationKind::SigmoidNormLUT})
    if (s == to_string(k)) return k;
  if (s == "softmax") return ActivationKind::SoftmaxFloat;
  if (s == "softmax-int") return ActivationKind::SoftmaxInt;
  if (s == "sigmoid") return ActivationKind::SigmoidLUT;
  if (s == "sigmoid-bias") return ActivationKind::SigmoidBiasLUT;
  if (s == "sigmoid-norm") return ActivationKind::SigmoidNormLUT;
  throw ConfigError("unknown activation kind '" + std::string(s) + "'");
}

void ModelHeader::validate() const {
  if (d == 0 || n == 0 || heads == 0 || d_ff == 0 || d_h == 0 || pool_k == 0)
    throw ConfigError("bundle header: dimensions must be positive");
  if (d % heads != 0) throw ConfigError("bundle header: d must be divisible by the head count");
  if ((d + pool_p) % pool_k != 0)
    throw ConfigError("bundle header: (d + pool_p) must be divisible by pool_k");
  if (delay_bin >= d) throw ConfigError("bundle header: delay_bin out of range");
  if (window == 0) throw ConfigError("bundle header: router window must be >= 1");
  if (static_cast<std::uint32_t>(activation) > 4)
    throw ConfigError("bundle header: unknown activation kind");
}

std::string_view to_string(SegmentId s) noexcept {
  switch (s) {
    case SegmentId::S1:
      return "S1";
    case SegmentId::S21:
      return "S21";
    case SegmentId::S22:
      return "S22";
    case SegmentId::S31:
      return "S31";
    case SegmentId::S32:
      return "S32";
  }
  return "?";
}

SegmentId segment_for(Scenario s, std::size_t layer) {
  expects(layer < encoder_layers(s), "segment_for: layer index beyond the scenario depth");
  switch (s) {
    case Scenario::S1:
      return SegmentId::S1;
    case Scenario::S2:
      return layer == 0 ? SegmentId::S21 : SegmentId::S22;
    case Scenario::S3:
      return layer == 0 ? SegmentId::S31 : SegmentId::S32;
  }
  return SegmentId::S1;
}

bool ModelBundle::has_scenario(Scenario s) const noexcept {
  if (!fcnn[index_of(s)].present()) return false;
  for (std::size_t l = 0; l < encoder_layers(s); ++l)
    if (!segment(segment_for(s, l)).present()) return false;
  return true;
}

void ModelBundle::validate() const {
  header.validate();
  const std::size_t d = header.d, n = header.n, dff = header.d_ff, dh = header.d_h;
  check_shape(slp.w, 3, n, "SLP W");
  check_len(slp.b, 3, "SLP b");
  for (std::size_t i = 0; i < kSegments; ++i) {
    const auto& s = segments[i];
    if (!s.present()) continue;
    const std::string tag(to_string(static_cast<SegmentId>(i)));
    check_shape(s.wq, d, d, tag + " W_q");
    check_shape(s.wk, d, d, tag + " W_k");
    check_shape(s.wv, d, d, tag + " W_v");
    check_shape(s.wo, d, d, tag + " W_o");
    check_shape(s.w1, d, dff, tag + " FFN W_1");
    check_len(s.b1, dff, tag + " FFN b_1");
    check_shape(s.w2, dff, d, tag + " FFN W_2");
    check_len(s.b2, d, tag + " FFN b_2");
  }
  for (Scenario sc : kScenarios) {
    const auto& f = fcnn[index_of(sc)];
    if (!f.present()) continue;
    const std::string tag = "FCNN_" + std::string(to_string(sc));
    check_shape(f.w1, header.flat_len(), dh, tag + " W_1");
    check_len(f.b1, dh, tag + " b_1");
    check_shape(f.w2, dh, 2, tag + " W_2");
    check_len(f.b2, 2, tag + " b_2");
  }
}

ModelBundle random_bundle(const ModelHeader& header, std::uint64_t seed, double scale) {
  header.validate();
  Rng rng(seed);
  ModelBundle b;
  b.header = header;
  const std::size_t d = header.d, dff = header.d_ff, dh = header.d_h;
  b.slp.w = random_matrix(rng, 3, header.n, scale);
  b.slp.b = random_vector(rng, 3, scale);
  for (auto& s : b.segments) {
    s.wq = random_matrix(rng, d, d, scale);
    s.wk = random_matrix(rng, d, d, scale);
    s.wv = random_matrix(rng, d, d, scale);
    s.wo = random_matrix(rng, d, d, scale);
    s.gamma = 1.0;
    s.w1 = random_matrix(rng, d, dff, scale);
    s.b1 = random_vector(rng, dff, scale);
    s.w2 = random_matrix(rng, dff, d, scale);
    s.b2 = random_vector(rng, d, scale);
  }
  for (auto& f : b.fcnn) {
    f.w1 = random_matrix(rng, header.flat_len(), dh, scale);
    f.b1 = random_vector(rng, dh, scale);
    f.w2 = random_matrix(rng, dh, 2, scale);
    f.b2 = random_vector(rng, 2, scale);
  }
  return b;
}

ModelBundle snap_to_q8_8(const ModelBundle& in) {
  ModelBundle b = in;
  b.slp.w = snap(in.slp.w);
  b.slp.b = snap(in.slp.b);
  for (auto& s : b.segments) {
    s.wq = snap(s.wq);
    s.wk = snap(s.wk);
    s.wv = snap(s.wv);
    s.wo = snap(s.wo);
    s.gamma = snap(s.gamma);
    s.w1 = snap(s.w1);
    s.b1 = snap(s.b1);
    s.w2 = snap(s.w2);
    s.b2 = snap(s.b2);
  }
  for (auto& f : b.fcnn) {
    f.w1 = snap(f.w1);
    f.b1 = snap(f.b1);
    f.w2 = snap(f.w2);
    f.b2 = snap(f.b2);
  }
  return b;
}

void write_bundle(std::ostream& os, const ModelBundle& b, Precision prec) {
  b.validate();
  binio::write_magic(os, kMagic);
  binio::write_u32(os, kBundleVersion);
  binio::write_u32(os, static_cast<std::uint32_t>(prec));
  const auto& h = b.header;
  for (std::uint32_t v : {h.d, h.n, h.heads, h.d_ff, h.pool_k, h.pool_p, h.d_h,
                          static_cast<std::uint32_t>(h.activation), h.delay_bin, h.window})
    binio::write_u32(os, v);

  // Right-hand operands are stored transposed so each output column is a
  // contiguous run; SLP W and the biases are stored as-is.
  write_matrix(os, b.slp.w, false, prec);
  write_vector(os, b.slp.b, prec);
  for (const auto& s : b.segments) {
    write_matrix(os, s.wq, true, prec);
    write_matrix(os, s.wk, true, prec);
    write_matrix(os, s.wv, true, prec);
    write_matrix(os, s.wo, true, prec);
    write_matrix(os, s.present() ? RealMatrix(1, 1, s.gamma) : RealMatrix(), false, prec);
    write_matrix(os, s.w1, true, prec);
    write_vector(os, s.b1, prec);
    write_matrix(os, s.w2, true, prec);
    write_vector(os, s.b2, prec);
  }
  for (const auto& f : b.fcnn) {
    write_matrix(os, f.w1, true, prec);
    write_vector(os, f.b1, prec);
    write_matrix(os, f.w2, true, prec);
    write_vector(os, f.b2, prec);
  }
}

ModelBundle read_bundle(std::istream& is, Precision* precision_out) {
  binio::expect_magic(is, kMagic, "weight bundle");
  const std::uint32_t version = binio::read_u32(is, "bundle version");
  if (version != kBundleVersion)
    throw IoError("bundle: unsupported version " + std::to_string(version));
  const std::uint32_t p = binio::read_u32(is, "bundle precision");
  if (p > 1) throw IoError("bundle: unknown precision tag");
  const auto prec = static_cast<Precision>(p);

  ModelBundle b;
  auto& h = b.header;
  h.d = binio::read_u32(is, "header");
  h.n = binio::read_u32(is, "header");
  h.heads = binio::read_u32(is, "header");
  h.d_ff = binio::read_u32(is, "header");
  h.pool_k = binio::read_u32(is, "header");
  h.pool_p = binio::read_u32(is, "header");
  h.d_h = binio::read_u32(is, "header");
  h.activation = static_cast<ActivationKind>(binio::read_u32(is, "header"));
  h.delay_bin = binio::read_u32(is, "header");
  h.window = binio::read_u32(is, "header");
  h.validate();

  b.slp.w = read_matrix(is, prec);
  b.slp.b = read_vector(is, prec);
  for (auto& s : b.segments) {
    s.wq = read_matrix(is, prec);
    s.wk = read_matrix(is, prec);
    s.wv = read_matrix(is, prec);
    s.wo = read_matrix(is, prec);
    const RealMatrix g = read_matrix(is, prec);
    s.gamma = g.empty() ? 1.0 : g(0, 0);
    s.w1 = read_matrix(is, prec);
    s.b1 = read_vector(is, prec);
    s.w2 = read_matrix(is, prec);
    s.b2 = read_vector(is, prec);
  }
  for (auto& f : b.fcnn) {
    f.w1 = read_matrix(is, prec);
    f.b1 = read_vector(is, prec);
    f.w2 = read_matrix(is, prec);
    f.b2 = read_vector(is, prec);
  }
  b.validate();
  if (precision_out) *precision_out = prec;
  return b;
}

void save_bundle(const std::string& path, const ModelBundle& b, Precision precision) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_bundle(os, b, precision);
  os.flush();
  if (!os) throw IoError("write to '" + path + "' failed");
}

ModelBundle load_bundle(const std::string& path, Precision* precision_out) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open bundle '" + path + "'");
  return read_bundle(is, precision_out);
}

}  // namespace mimoloc::nn
