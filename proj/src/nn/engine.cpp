// SPDX-License-Identifier: Apache-2.0
#include "mimoloc/nn/engine.hpp"

#include <string>

#include "mimoloc/errors.hpp"

namespace mimoloc::nn {

std::string_view Engine::name() const noexcept {
  return kind() == EngineKind::Reference ? "reference" : "integer";
}

Engine::Engine(ModelBundle bundle) : bundle_(std::move(bundle)) { bundle_.validate(); }

void Engine::require(Scenario s) const {
  if (!bundle_.has_scenario(s))
    throw ConfigError("model bundle has no parameters for scenario " + std::string(to_string(s)));
}

InferenceResult Engine::infer(const RealMatrix& fingerprint, RouterState& router,
                              const InferenceConfig& cfg) const {
  const Scenario label = classify(fingerprint);
  const Scenario selected = router.push(label);
  const Scenario scenario = cfg.scenario_override.value_or(selected);
  require(scenario);
  const sparsity::SparsityConfig* sp =
      cfg.sparsity_enabled ? &cfg.sparsity[index_of(scenario)] : nullptr;
  InferenceResult r = run(fingerprint, scenario, sp, cfg.ffn_residual);
  r.label = label;
  return r;
}

namespace {

void check_input(const RealMatrix& fp, const ModelHeader& h) {
  expects(fp.rows() == h.n && fp.cols() == h.d, "fingerprint shape does not match model header");
}

}  // namespace

// --- reference --------------------------------------------------------------

ReferenceEngine::ReferenceEngine(ModelBundle bundle, std::size_t bias_seq_len)
    : Engine(std::move(bundle)) {
  const auto& h = bundle_.header;
  expects(bias_seq_len > 0, "bias_seq_len must be positive");
  slp_ = ref::prepare(bundle_.slp);
  for (std::size_t i = 0; i < kSegments; ++i)
    if (bundle_.segments[i].present()) segments_[i] = ref::prepare(bundle_.segments[i], h.heads);
  for (std::size_t i = 0; i < 3; ++i)
    if (bundle_.fcnn[i].present()) fcnn_[i] = ref::prepare(bundle_.fcnn[i]);
  act_ = ActivationParams{h.activation, sigmoid_bias(bias_seq_len)};
}

Scenario ReferenceEngine::classify(const RealMatrix& fp) const {
  check_input(fp, bundle_.header);
  std::vector<double> col(fp.rows());
  for (std::size_t r = 0; r < fp.rows(); ++r) col[r] = fp(r, bundle_.header.delay_bin);
  const auto logits = ref::slp_logits(slp_, col);
  return argmax_label(std::span<const double>(logits));
}

InferenceResult ReferenceEngine::run(const RealMatrix& fp, Scenario scenario,
                                     const sparsity::SparsityConfig* sp, bool ffn_residual) const {
  check_input(fp, bundle_.header);
  require(scenario);
  const auto& h = bundle_.header;
  InferenceResult r;
  r.scenario = scenario;
  RealMatrix x;
  if (sp != nullptr) {
    auto det = sparsity::detect(fp, *sp);
    x = std::move(det.thresholded);
    r.mask = std::move(det.mask);
  } else {
    x = fp;
    r.mask = RowMask::dense(fp.rows());
  }
  r.encoder_layers = encoder_layers(scenario);
  for (std::size_t l = 0; l < r.encoder_layers; ++l) {
    const RowMask layer_mask = l == 0 ? r.mask : RowMask::dense(x.rows());
    x = ref::encoder_layer(x, segment(segment_for(scenario, l)), layer_mask, act_, ffn_residual);
  }
  const auto flat = ref::maxpool_flatten(x, h.pool_k, h.pool_p);
  r.coord = ref::fcnn(flat, fcnn(scenario));
  return r;
}

// --- integer ----------------------------------------------------------------

IntegerEngine::IntegerEngine(ModelBundle bundle, std::size_t bias_seq_len)
    : Engine(std::move(bundle)) {
  const auto& h = bundle_.header;
  expects(bias_seq_len > 0, "bias_seq_len must be positive");
  slp_ = fixed::prepare(bundle_.slp);
  for (std::size_t i = 0; i < kSegments; ++i)
    if (bundle_.segments[i].present()) segments_[i] = fixed::prepare(bundle_.segments[i], h.heads);
  for (std::size_t i = 0; i < 3; ++i)
    if (bundle_.fcnn[i].present()) fcnn_[i] = fixed::prepare(bundle_.fcnn[i]);
  bias_ = fxp::quantize(sigmoid_bias(bias_seq_len));
}

Scenario IntegerEngine::classify(const RealMatrix& fp) const {
  check_input(fp, bundle_.header);
  std::vector<fxp::QVal> col(fp.rows());
  for (std::size_t r = 0; r < fp.rows(); ++r) col[r] = fxp::quantize(fp(r, bundle_.header.delay_bin));
  const auto logits = fixed::slp_logits(slp_, col);
  return argmax_label(std::span<const fxp::AccVal>(logits));
}

InferenceResult IntegerEngine::run(const RealMatrix& fp, Scenario scenario,
                                   const sparsity::SparsityConfig* sp, bool ffn_residual) const {
  check_input(fp, bundle_.header);
  require(scenario);
  const auto& h = bundle_.header;
  InferenceResult r;
  r.scenario = scenario;
  fxp::QTensor x = fxp::quantize(fp);
  if (sp != nullptr) {
    auto det = sparsity::detect(std::move(x), *sp);
    x = std::move(det.thresholded);
    r.mask = std::move(det.mask);
  } else {
    r.mask = RowMask::dense(fp.rows());
  }
  r.encoder_layers = encoder_layers(scenario);
  for (std::size_t l = 0; l < r.encoder_layers; ++l) {
    const RowMask layer_mask = l == 0 ? r.mask : RowMask::dense(x.rows());
    x = fixed::encoder_layer(x, segment(segment_for(scenario, l)), layer_mask, h.activation, bias_,
                             ffn_residual);
  }
  const auto flat = fixed::maxpool_flatten(x, h.pool_k, h.pool_p);
  const auto out = fixed::fcnn(flat, fcnn(scenario));
  r.coord = Coord{fxp::dequantize(out[0]), fxp::dequantize(out[1])};
  return r;
}

std::unique_ptr<Engine> make_engine(EngineKind kind, ModelBundle bundle, std::size_t bias_seq_len) {
  if (kind == EngineKind::Reference)
    return std::make_unique<ReferenceEngine>(std::move(bundle), bias_seq_len);
  return std::make_unique<IntegerEngine>(std::move(bundle), bias_seq_len);
}

}  // namespace mimoloc::nn
