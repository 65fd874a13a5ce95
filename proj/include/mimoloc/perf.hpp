// SPDX-License-Identifier: Apache-2.0
#pragma once

// Closed-form cycle model of the mixed-dataflow accelerator.
//
// Stage costs are the raw closed forms. A report adds fixed per-layer
// control/memory overheads for the MHA and FFN buckets, a fixed overhead for
// the tail (router, detection, pooling, FCNN) and scales everything by
// c_overhead. The overheads and c are fitted by calibrate().

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mimoloc/nn/bundle.hpp"
#include "mimoloc/sparsity.hpp"
#include "mimoloc/types.hpp"

namespace mimoloc::perf {

enum class Dataflow { InputStationary, OutputStationary };

struct EngineSpec {
  std::uint32_t width = 46;  // PEs, one of 23, 32, 46, 64
  Dataflow dataflow = Dataflow::InputStationary;
  std::uint32_t pipeline_fill = 6;  // multiplier + adder tree depth

  void validate() const;  // throws ConfigError
};

enum class Stage : std::size_t {
  Slp, SparsityDetect, Qkv, Scores, Activation, Headmul, Wo, Ffn1, Ffn2, Pool, Fcnn
};
inline constexpr std::size_t kStages = 11;
std::string_view to_string(Stage s) noexcept;
Stage parse_stage(std::string_view s);  // throws ConfigError

struct PerfParams {
  double clock_hz = 1e8;
  std::uint32_t d_div = 16;  // divider latency per row
  bool parallel_heads = false;

  EngineSpec ve_qkv{46, Dataflow::InputStationary, 6};    // Q/K/V, W_o
  EngineSpec ve_attn{23, Dataflow::InputStationary, 6};   // Q.K^T
  EngineSpec ve_head{23, Dataflow::OutputStationary, 6};  // A.V
  EngineSpec ve_ffn{64, Dataflow::InputStationary, 6};
  EngineSpec ve_fcnn{64, Dataflow::OutputStationary, 6};
  EngineSpec ve_slp{32, Dataflow::OutputStationary, 6};

  // Calibration (see calibrate()). Zero overheads and c = 1 give the raw
  // closed forms.
  double c_overhead = 1.0;
  double overhead_mha = 0.0;   // cycles per encoder layer
  double overhead_ffn = 0.0;   // cycles per encoder layer
  double overhead_tail = 0.0;  // cycles per inference

  /// Throws ConfigError.
  void validate() const;
};

/// Network dimensions the model is evaluated for.
struct Dims {
  std::uint32_t n = 128, d = 46, heads = 2, d_ff = 64, d_h = 64, pool_k = 4, pool_p = 2;
  std::uint32_t flat_len() const noexcept { return n * ((d + pool_p) / pool_k); }
  static Dims from_header(const nn::ModelHeader& h);
};

/// Raw closed-form cycles of one stage. `rows` is n_eff for masked stages
/// and the FFN row count for Ffn1/Ffn2; ignored by the fixed-size stages.
double stage_cycles(Stage stage, std::size_t rows, const PerfParams& p, nn::ActivationKind kind,
                    const Dims& dims = {});

struct LayerCycles {
  std::array<double, kStages> stages{};  // raw, only encoder stages non-zero
  double overhead_mha = 0.0;
  double overhead_ffn = 0.0;
  std::size_t n_eff = 0;
  double total() const noexcept;
};

struct CycleReport {
  Scenario scenario = Scenario::S1;
  nn::ActivationKind activation = nn::ActivationKind::SigmoidBiasLUT;
  std::size_t n_eff = 0;
  /// Calibrated cycles per stage, summed over layers.
  std::array<double, kStages> stages{};
  double overhead_mha = 0.0, overhead_ffn = 0.0, overhead_tail = 0.0;  // calibrated
  std::vector<double> layer_totals;  // calibrated, per encoder layer
  double total_cycles = 0.0;         // sum of stages and overheads
  double dense_cycles = 0.0;
  double latency_s = 0.0;
  double speedup = 1.0;
  double throughput_pos_per_s = 0.0;
};

CycleReport pipeline_report(const sparsity::RowMask& mask, Scenario scenario,
                            nn::ActivationKind kind, const PerfParams& p, const Dims& dims = {});
/// Report for a synthetic mask skipping round(fraction * n) rows.
CycleReport pipeline_report(double skip_fraction, Scenario scenario, nn::ActivationKind kind,
                            const PerfParams& p, const Dims& dims = {});

struct StageShare {
  double mha = 0.0, ffn = 0.0, fcnn = 0.0;  // fcnn includes router, detect, pool
};
StageShare stage_share(const CycleReport& r);

/// Positions per second for a given latency; a non-positive latency gives 0.
double throughput_from_latency(double latency_s) noexcept;

struct CalibrationTargets {
  Scenario scenario = Scenario::S1;
  nn::ActivationKind activation = nn::ActivationKind::SigmoidBiasLUT;
  double dense_cycles = 106000.0;
  double skip_fraction = 0.65;
  double speedup = 2.08;
  double share_mha = 0.80, share_ffn = 0.15;  // the tail takes the rest
};

/// Solves overhead_{mha,ffn,tail} and c_overhead so that the dense total,
/// the speedup at the given skip fraction and the dense stage shares hit
/// the targets exactly. Other fields of `base` are kept. Throws ConfigError
/// if the targets need negative overheads.
PerfParams calibrate(const PerfParams& base, const CalibrationTargets& t, const Dims& dims = {});

/// Default parameters calibrated against CalibrationTargets{}.
const PerfParams& calibrated_defaults();

/// Stage counts, layer totals, latency, speedup, throughput and shares.
nlohmann::json to_json(const CycleReport& r);
/// Every PerfParams field, calibration constants included.
nlohmann::json to_json(const PerfParams& p);
/// Inverse of to_json(PerfParams); missing keys keep the values of `base`.
PerfParams params_from_json(const nlohmann::json& j, const PerfParams& base);
void write_csv_header(std::ostream& os);
void write_csv_row(std::ostream& os, double skip_fraction, const CycleReport& r);

}  // namespace mimoloc::perf
