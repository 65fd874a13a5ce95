// SPDX-License-Identifier: Apache-2.0
#include "mimoloc/perf.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "mimoloc/errors.hpp"

namespace mimoloc::perf {

namespace {

constexpr std::array<std::string_view, kStages> kStageNames = {
    "slp", "sparsity_detect", "qkv", "scores", "activation", "headmul",
    "wo",  "ffn1",            "ffn2", "pool",  "fcnn"};

constexpr bool is_mha(Stage s) {
  return s == Stage::Qkv || s == Stage::Scores || s == Stage::Activation || s == Stage::Headmul ||
         s == Stage::Wo;
}
constexpr bool is_ffn(Stage s) { return s == Stage::Ffn1 || s == Stage::Ffn2; }

double ceil_div(std::uint64_t a, std::uint64_t b) { return static_cast<double>((a + b - 1) / b); }

struct Buckets {
  double mha = 0.0, ffn = 0.0, tail = 0.0;
  double total() const { return mha + ffn + tail; }
};

Buckets raw_buckets(std::size_t n_eff, Scenario s, nn::ActivationKind kind, const PerfParams& p,
                    const Dims& dims) {
  Buckets b;
  const std::size_t layers = encoder_layers(s);
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t rows = l == 0 ? n_eff : dims.n;
    for (std::size_t i = 0; i < kStages; ++i) {
      const auto st = static_cast<Stage>(i);
      if (is_mha(st)) b.mha += stage_cycles(st, rows, p, kind, dims);
      if (is_ffn(st)) b.ffn += stage_cycles(st, rows, p, kind, dims);
    }
  }
  for (Stage st : {Stage::Slp, Stage::SparsityDetect, Stage::Pool, Stage::Fcnn})
    b.tail += stage_cycles(st, dims.n, p, kind, dims);
  return b;
}

std::size_t n_eff_for(double fraction, std::size_t n) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("skip fraction must be in [0, 1]");
  return n - static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

}  // namespace

void EngineSpec::validate() const {
  if (width != 23 && width != 32 && width != 46 && width != 64)
    throw ConfigError("engine width must be one of 23, 32, 46, 64 (got " + std::to_string(width) +
                      ")");
}

std::string_view to_string(Stage s) noexcept { return kStageNames[static_cast<std::size_t>(s)]; }

Stage parse_stage(std::string_view s) {
  for (std::size_t i = 0; i < kStages; ++i)
    if (kStageNames[i] == s) return static_cast<Stage>(i);
  throw ConfigError("unknown stage '" + std::string(s) + "'");
}

void PerfParams::validate() const {
  if (!(clock_hz > 0.0) || !std::isfinite(clock_hz)) throw ConfigError("clock_hz must be positive");
  if (!(c_overhead > 0.0) || !std::isfinite(c_overhead))
    throw ConfigError("c_overhead must be positive");
  if (overhead_mha < 0.0 || overhead_ffn < 0.0 || overhead_tail < 0.0)
    throw ConfigError("overheads must be non-negative");
  for (const EngineSpec* e : {&ve_qkv, &ve_attn, &ve_head, &ve_ffn, &ve_fcnn, &ve_slp}) e->validate();
}

Dims Dims::from_header(const nn::ModelHeader& h) {
  return Dims{h.n, h.d, h.heads, h.d_ff, h.d_h, h.pool_k, h.pool_p};
}

double stage_cycles(Stage stage, std::size_t rows, const PerfParams& p, nn::ActivationKind kind,
                    const Dims& dims) {
  expects(rows <= dims.n, "stage_cycles: rows exceeds token count");
  const double r = static_cast<double>(rows);
  const double d = dims.d;
  const std::uint32_t d_k = dims.heads == 0 ? 0 : dims.d / dims.heads;
  // Sequential heads share one engine; parallel heads overlap the
  // quadratic passes.
  const double head_passes = p.parallel_heads ? 1.0 : static_cast<double>(dims.heads);
  switch (stage) {
    case Stage::Slp:
      return ceil_div(std::uint64_t{dims.n} * 3, p.ve_slp.width);
    case Stage::SparsityDetect:
      return dims.n;
    case Stage::Qkv:
      return rows == 0 ? 0.0 : 3.0 * r * d * ceil_div(dims.d, p.ve_qkv.width) + p.ve_qkv.pipeline_fill;
    case Stage::Scores:
      return head_passes * r * r * ceil_div(d_k, p.ve_attn.width);
    case Stage::Activation: {
      if (rows == 0) return 0.0;
      double c = p.ve_attn.pipeline_fill;  // sigmoid overlaps with streaming
      if (nn::is_softmax(kind))
        c += head_passes * 2.0 * r * r + dims.heads * double(p.d_div) * r;
      else if (kind == nn::ActivationKind::SigmoidNormLUT)
        c += dims.heads * (r + double(p.d_div) * r);
      return c;
    }
    case Stage::Headmul:
      return head_passes * r * r * ceil_div(d_k, p.ve_head.width);
    case Stage::Wo:
      return r * d * ceil_div(dims.d, p.ve_qkv.width);
    case Stage::Ffn1:
      return r * dims.d_ff * ceil_div(dims.d, p.ve_ffn.width);
    case Stage::Ffn2:
      return r * d * ceil_div(dims.d_ff, p.ve_ffn.width);
    case Stage::Pool:
      return 0.0;  // fused into the FCNN input stream
    case Stage::Fcnn:
      return dims.flat_len() * ceil_div(dims.d_h, p.ve_fcnn.width) + 2.0 * dims.d_h;
  }
  throw ContractViolation("stage_cycles: unknown stage");
}

double LayerCycles::total() const noexcept {
  double t = overhead_mha + overhead_ffn;
  for (double s : stages) t += s;
  return t;
}

CycleReport pipeline_report(const sparsity::RowMask& mask, Scenario scenario,
                            nn::ActivationKind kind, const PerfParams& p, const Dims& dims) {
  expects(mask.rows() == dims.n, "pipeline_report: mask length != token count");
  p.validate();
  const double c = p.c_overhead;
  CycleReport r;
  r.scenario = scenario;
  r.activation = kind;
  r.n_eff = mask.kept();

  const std::size_t layers = encoder_layers(scenario);
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t rows = l == 0 ? r.n_eff : dims.n;
    double layer = 0.0;
    for (std::size_t i = 0; i < kStages; ++i) {
      const auto st = static_cast<Stage>(i);
      if (!is_mha(st) && !is_ffn(st)) continue;
      const double v = c * stage_cycles(st, rows, p, kind, dims);
      r.stages[i] += v;
      layer += v;
    }
    r.overhead_mha += c * p.overhead_mha;
    r.overhead_ffn += c * p.overhead_ffn;
    r.layer_totals.push_back(layer + c * (p.overhead_mha + p.overhead_ffn));
  }
  for (Stage st : {Stage::Slp, Stage::SparsityDetect, Stage::Pool, Stage::Fcnn})
    r.stages[static_cast<std::size_t>(st)] = c * stage_cycles(st, dims.n, p, kind, dims);
  r.overhead_tail = c * p.overhead_tail;

  r.total_cycles = r.overhead_mha + r.overhead_ffn + r.overhead_tail;
  for (double v : r.stages) r.total_cycles += v;

  if (r.n_eff == dims.n) {
    r.dense_cycles = r.total_cycles;
  } else {
    r.dense_cycles = pipeline_report(sparsity::RowMask::dense(dims.n), scenario, kind, p, dims)
                         .total_cycles;
  }
  r.latency_s = r.total_cycles / p.clock_hz;
  r.speedup = r.dense_cycles / r.total_cycles;
  r.throughput_pos_per_s = throughput_from_latency(r.latency_s);
  return r;
}

CycleReport pipeline_report(double skip_fraction, Scenario scenario, nn::ActivationKind kind,
                            const PerfParams& p, const Dims& dims) {
  const std::size_t n_eff = n_eff_for(skip_fraction, dims.n);
  std::vector<std::uint8_t> skip(dims.n, 0);
  for (std::size_t i = n_eff; i < dims.n; ++i) skip[i] = 1;
  return pipeline_report(sparsity::RowMask::from_skip(std::move(skip)), scenario, kind, p, dims);
}

StageShare stage_share(const CycleReport& r) {
  StageShare s;
  for (std::size_t i = 0; i < kStages; ++i) {
    const auto st = static_cast<Stage>(i);
    if (is_mha(st))
      s.mha += r.stages[i];
    else if (is_ffn(st))
      s.ffn += r.stages[i];
    else
      s.fcnn += r.stages[i];
  }
  s.mha += r.overhead_mha;
  s.ffn += r.overhead_ffn;
  s.fcnn += r.overhead_tail;
  if (r.total_cycles > 0.0) {
    s.mha /= r.total_cycles;
    s.ffn /= r.total_cycles;
    s.fcnn /= r.total_cycles;
  }
  return s;
}

double throughput_from_latency(double latency_s) noexcept {
  return latency_s > 0.0 ? 1.0 / latency_s : 0.0;
}

PerfParams calibrate(const PerfParams& base, const CalibrationTargets& t, const Dims& dims) {
  if (!(t.speedup > 1.0)) throw ConfigError("calibration speedup target must exceed 1");
  if (!(t.dense_cycles > 0.0)) throw ConfigError("calibration dense cycle target must be positive");
  const Buckets dense = raw_buckets(dims.n, t.scenario, t.activation, base, dims);
  const Buckets sparse =
      raw_buckets(n_eff_for(t.skip_fraction, dims.n), t.scenario, t.activation, base, dims);

  // c (R_d + O) = D and (R_d + O) / (R_s + O) = speedup give O and c; the
  // shares then split O across buckets.
  const double overhead = (dense.total() - t.speedup * sparse.total()) / (t.speedup - 1.0);
  const double scaled = dense.total() + overhead;  // D / c
  const double layers = static_cast<double>(encoder_layers(t.scenario));
  const double om = t.share_mha * scaled - dense.mha;
  const double of = t.share_ffn * scaled - dense.ffn;
  const double ot = overhead - om - of;
  if (overhead < 0.0 || om < 0.0 || of < 0.0 || ot < 0.0)
    throw ConfigError("calibration targets are unreachable with non-negative overheads");

  PerfParams p = base;
  p.c_overhead = t.dense_cycles / scaled;
  p.overhead_mha = om / layers;
  p.overhead_ffn = of / layers;
  p.overhead_tail = ot;
  return p;
}

const PerfParams& calibrated_defaults() {
  static const PerfParams p = calibrate(PerfParams{}, CalibrationTargets{});
  return p;
}

nlohmann::json to_json(const CycleReport& r) {
  nlohmann::json stages = nlohmann::json::object();
  for (std::size_t i = 0; i < kStages; ++i) stages[std::string(kStageNames[i])] = r.stages[i];
  const StageShare sh = stage_share(r);
  return nlohmann::json{
      {"scenario", to_string(r.scenario)},
      {"activation", nn::to_string(r.activation)},
      {"n_eff", r.n_eff},
      {"stages", stages},
      {"overhead", {{"mha", r.overhead_mha}, {"ffn", r.overhead_ffn}, {"tail", r.overhead_tail}}},
      {"layer_totals", r.layer_totals},
      {"total_cycles", r.total_cycles},
      {"dense_cycles", r.dense_cycles},
      {"latency_s", r.latency_s},
      {"speedup", r.speedup},
      {"throughput_pos_per_s", r.throughput_pos_per_s},
      {"share", {{"mha", sh.mha}, {"ffn", sh.ffn}, {"fcnn", sh.fcnn}}},
  };
}

namespace {

nlohmann::json engine_json(const EngineSpec& e) {
  return {{"width", e.width},
          {"dataflow", e.dataflow == Dataflow::InputStationary ? "input" : "output"},
          {"pipeline_fill", e.pipeline_fill}};
}

EngineSpec engine_from_json(const nlohmann::json& j, EngineSpec e) {
  if (!j.is_object()) throw ConfigError("engine spec must be an object");
  for (const auto& [key, v] : j.items()) {
    if (key == "width") {
      e.width = v.get<std::uint32_t>();
    } else if (key == "dataflow") {
      const auto s = v.get<std::string>();
      if (s == "input")
        e.dataflow = Dataflow::InputStationary;
      else if (s == "output")
        e.dataflow = Dataflow::OutputStationary;
      else
        throw ConfigError("dataflow must be 'input' or 'output'");
    } else if (key == "pipeline_fill") {
      e.pipeline_fill = v.get<std::uint32_t>();
    } else {
      throw ConfigError("unknown engine key '" + key + "'");
    }
  }
  return e;
}

}  // namespace

nlohmann::json to_json(const PerfParams& p) {
  return nlohmann::json{
      {"clock_hz", p.clock_hz},
      {"d_div", p.d_div},
      {"parallel_heads", p.parallel_heads},
      {"engines",
       {{"qkv", engine_json(p.ve_qkv)},
        {"attn", engine_json(p.ve_attn)},
        {"head", engine_json(p.ve_head)},
        {"ffn", engine_json(p.ve_ffn)},
        {"fcnn", engine_json(p.ve_fcnn)},
        {"slp", engine_json(p.ve_slp)}}},
      {"c_overhead", p.c_overhead},
      {"overhead_mha", p.overhead_mha},
      {"overhead_ffn", p.overhead_ffn},
      {"overhead_tail", p.overhead_tail},
  };
}

PerfParams params_from_json(const nlohmann::json& j, const PerfParams& base) {
  if (!j.is_object()) throw ConfigError("perf parameters must be an object");
  PerfParams p = base;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "clock_hz") p.clock_hz = v.get<double>();
      else if (key == "d_div") p.d_div = v.get<std::uint32_t>();
      else if (key == "parallel_heads") p.parallel_heads = v.get<bool>();
      else if (key == "c_overhead") p.c_overhead = v.get<double>();
      else if (key == "overhead_mha") p.overhead_mha = v.get<double>();
      else if (key == "overhead_ffn") p.overhead_ffn = v.get<double>();
      else if (key == "overhead_tail") p.overhead_tail = v.get<double>();
      else if (key == "engines") {
        for (const auto& [name, e] : v.items()) {
          if (name == "qkv") p.ve_qkv = engine_from_json(e, p.ve_qkv);
          else if (name == "attn") p.ve_attn = engine_from_json(e, p.ve_attn);
          else if (name == "head") p.ve_head = engine_from_json(e, p.ve_head);
          else if (name == "ffn") p.ve_ffn = engine_from_json(e, p.ve_ffn);
          else if (name == "fcnn") p.ve_fcnn = engine_from_json(e, p.ve_fcnn);
          else if (name == "slp") p.ve_slp = engine_from_json(e, p.ve_slp);
          else throw ConfigError("unknown engine '" + name + "'");
        }
      } else {
        throw ConfigError("unknown perf key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("perf parameters: ") + e.what());
  }
  p.validate();
  return p;
}

void write_csv_header(std::ostream& os) {
  os << "skip_fraction,scenario,activation,n_eff,total_cycles,latency_s,speedup,"
        "throughput_pos_per_s,share_mha,share_ffn,share_fcnn\n";
}

void write_csv_row(std::ostream& os, double skip_fraction, const CycleReport& r) {
  const StageShare sh = stage_share(r);
  char buf[512];
  std::snprintf(buf, sizeof buf, "%.9g,%s,%s,%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                skip_fraction, std::string(to_string(r.scenario)).c_str(),
                std::string(nn::to_string(r.activation)).c_str(), r.n_eff, r.total_cycles,
                r.latency_s, r.speedup, r.throughput_pos_per_s, sh.mha, sh.ffn, sh.fcnn);
  os << buf;
}

}  // namespace mimoloc::perf
