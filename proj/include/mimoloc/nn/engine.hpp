// SPDX-License-Identifier: Apache-2.0
#pragma once

// The localisation network in two interchangeable engines:
//
//   nn::ref    double precision, the numerical oracle
//   nn::fixed  integer-only Q8.8 with 40-bit accumulation
//
// Weights are prepared once into transposed ("column as row") layout so
// every output element is one contiguous dot product. Row masks apply to the
// first encoder layer only: skipped rows take no part as queries, keys or
// values and pass through unchanged; kept rows get x + MHA(x) and then the
// FFN. Later layers run densely.

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mimoloc/fxp.hpp"
#include "mimoloc/nn/activation.hpp"
#include "mimoloc/nn/bundle.hpp"
#include "mimoloc/nn/router.hpp"
#include "mimoloc/sparsity.hpp"

namespace mimoloc::nn {

using sparsity::Coord;
using sparsity::RowMask;

/// Leaky-ReLU negative slope of the FCNN hidden layer.
inline constexpr double kLeakySlope = 0.3;

namespace ref {

struct Segment {
  RealMatrix wq_t, wk_t, wv_t, wo_t;  // d x d, row c = column c of W
  double scale = 1.0;                 // gamma / sqrt(d_k)
  RealMatrix w1_t;                    // d_ff x d
  std::vector<double> b1;
  RealMatrix w2_t;                    // d x d_ff
  std::vector<double> b2;
  std::size_t heads = 2;
};

struct Fcnn {
  RealMatrix w1_t;  // d_h x flat
  std::vector<double> b1;
  RealMatrix w2_t;  // 2 x d_h
  std::vector<double> b2;
  double slope = kLeakySlope;
};

struct Slp {
  RealMatrix w;  // 3 x n
  std::vector<double> b;
};

Segment prepare(const EncoderSegment& s, std::size_t heads);
Fcnn prepare(const FcnnParams& f);
Slp prepare(const SlpParams& s);

struct Qkv {
  RealMatrix q, k, v;
};

std::array<double, 3> slp_logits(const Slp& slp, std::span<const double> x);
/// x * w for a pre-transposed w, plus an optional bias per output column.
RealMatrix linear(const RealMatrix& x, const RealMatrix& w_t, std::span<const double> bias = {});
Qkv qkv_project(const RealMatrix& x, const Segment& seg);
RealMatrix head_slice(const RealMatrix& m, std::size_t head, std::size_t heads);
RealMatrix attention_scores(const RealMatrix& qh, const RealMatrix& kh, double scale);
RealMatrix head_output(const RealMatrix& a, const RealMatrix& vh);
RealMatrix mha(const RealMatrix& x, const Segment& seg, const RowMask& mask,
               const ActivationParams& act);
RealMatrix ffn(const RealMatrix& x, const Segment& seg);
RealMatrix encoder_layer(const RealMatrix& x, const Segment& seg, const RowMask& mask,
                         const ActivationParams& act, bool ffn_residual = false);
/// Per row: zero-pad to d + p, max over consecutive windows of k, flatten.
std::vector<double> maxpool_flatten(const RealMatrix& x, std::size_t k, std::size_t p);
Coord fcnn(std::span<const double> v, const Fcnn& f);

}  // namespace ref

namespace fixed {

using fxp::QTensor;
using fxp::QVal;

inline const QVal kLeakySlopeQ = fxp::quantize(kLeakySlope);  // code 77

struct Segment {
  QTensor wq_t, wk_t, wv_t, wo_t;
  QVal scale;  // quantize(gamma / sqrt(d_k)), applied after the Q.K dot
  QTensor w1_t;
  std::vector<QVal> b1;
  QTensor w2_t;
  std::vector<QVal> b2;
  std::size_t heads = 2;
};

struct Fcnn {
  QTensor w1_t;
  std::vector<QVal> b1;
  QTensor w2_t;
  std::vector<QVal> b2;
  QVal slope = kLeakySlopeQ;
};

struct Slp {
  QTensor w;
  std::vector<QVal> b;
};

Segment prepare(const EncoderSegment& s, std::size_t heads);
Fcnn prepare(const FcnnParams& f);
Slp prepare(const SlpParams& s);

/// The reference-arithmetic twin of a prepared integer segment: identical
/// (dequantised) weights and folded scale.
ref::Segment mirror(const Segment& s);
ref::Fcnn mirror(const Fcnn& f);
ref::Slp mirror(const Slp& s);

struct Qkv {
  QTensor q, k, v;
};

/// Exact logits at Q16.16 scale (bias widened, no rounding).
std::array<fxp::AccVal, 3> slp_logits(const Slp& slp, std::span<const QVal> x);
/// requantize(x * w + bias) per element, one rounding each.
QTensor linear(const QTensor& x, const QTensor& w_t, std::span<const QVal> bias = {});
Qkv qkv_project(const QTensor& x, const Segment& seg);
QTensor head_slice(const QTensor& m, std::size_t head, std::size_t heads);
QTensor attention_scores(const QTensor& qh, const QTensor& kh, QVal scale);
QTensor head_output(const QTensor& a, const QTensor& vh);
QTensor mha(const QTensor& x, const Segment& seg, const RowMask& mask, ActivationKind kind,
            QVal bias);
QTensor ffn(const QTensor& x, const Segment& seg);
QTensor encoder_layer(const QTensor& x, const Segment& seg, const RowMask& mask,
                      ActivationKind kind, QVal bias, bool ffn_residual = false);
std::vector<QVal> maxpool_flatten(const QTensor& x, std::size_t k, std::size_t p);
/// Output coordinates in Q8.8.
std::array<QVal, 2> fcnn(std::span<const QVal> v, const Fcnn& f);

}  // namespace fixed

// --- end-to-end -------------------------------------------------------------

struct InferenceConfig {
  std::array<sparsity::SparsityConfig, 3> sparsity{};  // per scenario
  bool sparsity_enabled = true;
  std::optional<Scenario> scenario_override;
  bool ffn_residual = false;
  /// Sequence length used for the sigmoid bias -ln(n); the full token count.
  std::size_t bias_seq_len = 128;
};

struct InferenceResult {
  Scenario scenario = Scenario::S1;  // model that ran
  Scenario label = Scenario::S1;     // router argmax for this snapshot
  Coord coord;
  RowMask mask;
  std::size_t encoder_layers = 0;
};

enum class EngineKind { Reference, Integer };

class Engine {
 public:
  virtual ~Engine() = default;

  virtual EngineKind kind() const noexcept = 0;
  std::string_view name() const noexcept;

  /// Router argmax for one fingerprint.
  virtual Scenario classify(const RealMatrix& fingerprint) const = 0;

  /// Runs the specialised model of `scenario`. A null `sparsity` skips
  /// thresholding and masking.
  virtual InferenceResult run(const RealMatrix& fingerprint, Scenario scenario,
                              const sparsity::SparsityConfig* sparsity,
                              bool ffn_residual = false) const = 0;

  /// classify -> route (unless overridden) -> threshold/mask -> model.
  InferenceResult infer(const RealMatrix& fingerprint, RouterState& router,
                        const InferenceConfig& cfg) const;

  const ModelBundle& bundle() const noexcept { return bundle_; }

 protected:
  explicit Engine(ModelBundle bundle);
  void require(Scenario s) const;

  ModelBundle bundle_;
};

class ReferenceEngine final : public Engine {
 public:
  explicit ReferenceEngine(ModelBundle bundle, std::size_t bias_seq_len = 128);

  EngineKind kind() const noexcept override { return EngineKind::Reference; }
  Scenario classify(const RealMatrix& fingerprint) const override;
  InferenceResult run(const RealMatrix& fingerprint, Scenario scenario,
                      const sparsity::SparsityConfig* sparsity,
                      bool ffn_residual = false) const override;

  const ref::Segment& segment(SegmentId id) const { return segments_[static_cast<std::size_t>(id)]; }
  const ref::Fcnn& fcnn(Scenario s) const { return fcnn_[index_of(s)]; }
  const ActivationParams& activation() const noexcept { return act_; }

 private:
  ref::Slp slp_;
  std::array<ref::Segment, kSegments> segments_;
  std::array<ref::Fcnn, 3> fcnn_;
  ActivationParams act_;
};

class IntegerEngine final : public Engine {
 public:
  explicit IntegerEngine(ModelBundle bundle, std::size_t bias_seq_len = 128);

  EngineKind kind() const noexcept override { return EngineKind::Integer; }
  Scenario classify(const RealMatrix& fingerprint) const override;
  InferenceResult run(const RealMatrix& fingerprint, Scenario scenario,
                      const sparsity::SparsityConfig* sparsity,
                      bool ffn_residual = false) const override;

  const fixed::Segment& segment(SegmentId id) const {
    return segments_[static_cast<std::size_t>(id)];
  }
  const fixed::Fcnn& fcnn(Scenario s) const { return fcnn_[index_of(s)]; }
  const fixed::Slp& slp() const noexcept { return slp_; }
  fxp::QVal bias() const noexcept { return bias_; }

 private:
  fixed::Slp slp_;
  std::array<fixed::Segment, kSegments> segments_;
  std::array<fixed::Fcnn, 3> fcnn_;
  fxp::QVal bias_;
};

std::unique_ptr<Engine> make_engine(EngineKind kind, ModelBundle bundle,
                                    std::size_t bias_seq_len = 128);

}  // namespace mimoloc::nn
