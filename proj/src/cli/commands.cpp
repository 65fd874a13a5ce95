// SPDX-License-Identifier: Apache-2.0
#include "cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>
#include <tuple>

#include "mimoloc/errors.hpp"
#include "mimoloc/io.hpp"
#include "mimoloc/nn/engine.hpp"
#include "mimoloc/perf.hpp"

namespace mimoloc::cli {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_config_comment(std::ostream& os, const RunConfig& c, std::string_view command) {
  os << "# mimoloc " << command << "\n# config: " << to_json(c).dump() << '\n';
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be
/// written by index so the output order never depends on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::vector<RealMatrix> load_inputs(const RunConfig& c, const nn::ModelHeader& h) {
  if (c.fingerprints.empty()) throw ConfigError("paths.fingerprints is required");
  auto fps = io::load_fingerprints(c.fingerprints);
  for (const auto& m : fps)
    if (m.rows() != h.n || m.cols() != h.d)
      throw ConfigError("fingerprint shape " + std::to_string(m.rows()) + "x" +
                        std::to_string(m.cols()) + " does not match the bundle (" +
                        std::to_string(h.n) + "x" + std::to_string(h.d) + ")");
  return fps;
}

/// Router labels and the scenario each snapshot runs with.
struct Routing {
  std::vector<Scenario> labels;
  std::vector<Scenario> scenarios;
};

Routing route_all(const RunConfig& c, const nn::Engine& engine, const std::vector<RealMatrix>& fps) {
  Routing r;
  r.labels.resize(fps.size());
  parallel_for(fps.size(), c.threads, [&](std::size_t i) { r.labels[i] = engine.classify(fps[i]); });
  nn::RouterState state(c.window);
  r.scenarios.reserve(fps.size());
  for (Scenario l : r.labels) {
    const Scenario sel = state.push(l);
    r.scenarios.push_back(c.scenario.value_or(sel));
  }
  for (Scenario s : r.scenarios)
    if (!engine.bundle().has_scenario(s))
      throw ConfigError("bundle has no model for routed scenario " + std::string(to_string(s)));
  return r;
}

const sparsity::SparsityConfig* sparsity_for(const RunConfig& c, Scenario s) {
  return c.sparsity_enabled ? &c.sparsity[index_of(s)] : nullptr;
}

double distance(const sparsity::Coord& a, const sparsity::Coord& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace

nn::ModelBundle resolve_bundle(const RunConfig& c) {
  nn::ModelBundle b = c.bundle.empty()
                          ? nn::snap_to_q8_8(nn::random_bundle(nn::ModelHeader{}, c.bundle_seed, c.bundle_scale))
                          : nn::load_bundle(c.bundle);
  if (c.activation) b.header.activation = *c.activation;
  return b;
}

std::vector<RealMatrix> generate_snapshots(const RunConfig& c, std::vector<Scenario>* labels) {
  std::vector<RealMatrix> out;
  std::uint64_t index = 0;
  for (const auto& seg : c.segments) {
    const auto profile = profile_for(c, seg.scenario, c.generate_seed + index);
    for (auto& fp : chansim::generate_batch(profile, seg.count, c.hann)) {
      out.push_back(std::move(fp.values));
      if (labels) labels->push_back(seg.scenario);
    }
    index += seg.count;
  }
  return out;
}

void cmd_generate(const RunConfig& c, std::ostream& fingerprints, std::ostream& sidecar) {
  std::vector<Scenario> labels;
  const auto snaps = generate_snapshots(c, &labels);
  io::write_fingerprints(fingerprints, snaps);
  json names = json::array();
  for (Scenario s : labels) names.push_back(to_string(s));
  sidecar << json{{"config", to_json(c)}, {"count", snaps.size()}, {"scenarios", names}}.dump(2)
          << '\n';
}

void cmd_infer(const RunConfig& c, std::ostream& csv) {
  const auto bundle = resolve_bundle(c);
  const auto fps = load_inputs(c, bundle.header);
  const bool use_int = c.engine != EngineChoice::Float;
  const auto primary = nn::make_engine(use_int ? nn::EngineKind::Integer : nn::EngineKind::Reference,
                                       bundle, c.bias_seq_len);
  std::unique_ptr<nn::Engine> twin;
  if (c.engine == EngineChoice::Both)
    twin = nn::make_engine(nn::EngineKind::Reference, bundle, c.bias_seq_len);

  const Routing routing = route_all(c, *primary, fps);
  std::vector<nn::InferenceResult> results(fps.size());
  std::vector<sparsity::Coord> twin_coords(fps.size());
  parallel_for(fps.size(), c.threads, [&](std::size_t i) {
    const Scenario s = routing.scenarios[i];
    results[i] = primary->run(fps[i], s, sparsity_for(c, s), c.ffn_residual);
    if (twin) twin_coords[i] = twin->run(fps[i], s, sparsity_for(c, s), c.ffn_residual).coord;
  });

  const auto dims = perf::Dims::from_header(bundle.header);
  write_config_comment(csv, c, "infer");
  csv << "snapshot,label,scenario,encoder_layers,x,y,kept_rows,row_sparsity,cycles,latency_s";
  if (twin) csv << ",x_float,y_float,deviation";
  csv << '\n';
  for (std::size_t i = 0; i < fps.size(); ++i) {
    const auto& r = results[i];
    const auto rep = perf::pipeline_report(r.mask, r.scenario, bundle.header.activation, c.perf, dims);
    csv << i << ',' << to_string(routing.labels[i]) << ',' << to_string(r.scenario) << ','
        << r.encoder_layers << ',' << fmt(r.coord.x) << ',' << fmt(r.coord.y) << ','
        << r.mask.kept() << ',' << fmt(r.mask.skip_fraction()) << ',' << fmt(rep.total_cycles)
        << ',' << fmt(rep.latency_s);
    if (twin)
      csv << ',' << fmt(twin_coords[i].x) << ',' << fmt(twin_coords[i].y) << ','
          << fmt(distance(r.coord, twin_coords[i]));
    csv << '\n';
  }
}

void cmd_sweep(const RunConfig& c, std::ostream& csv) {
  const auto bundle = resolve_bundle(c);
  const auto fps = load_inputs(c, bundle.header);
  const bool use_int = c.engine != EngineChoice::Float;
  const auto engine = nn::make_engine(use_int ? nn::EngineKind::Integer : nn::EngineKind::Reference,
                                      bundle, c.bias_seq_len);
  const Routing routing = route_all(c, *engine, fps);

  // Many grid points give the same mask for a snapshot; the output only
  // depends on (snapshot, T_e, mask), so memoise on that.
  std::map<std::tuple<std::size_t, double, std::vector<std::uint8_t>>, sparsity::Coord> memo;
  const sparsity::InferFn fn = [&](std::size_t i, const sparsity::SparsityConfig* sp) {
    if (sp == nullptr) return engine->run(fps[i], routing.scenarios[i], nullptr, c.ffn_residual).coord;
    const auto mask = use_int ? sparsity::detect(fxp::quantize(fps[i]), *sp).mask
                              : sparsity::detect(fps[i], *sp).mask;
    auto key = std::make_tuple(i, sp->t_elem, mask.skip);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const auto coord = engine->run(fps[i], routing.scenarios[i], sp, c.ffn_residual).coord;
    memo.emplace(std::move(key), coord);
    return coord;
  };
  const auto points = sparsity::sweep(fps, c.sweep_t_elem, c.sweep_t_rowcount, fn, use_int);
  const auto* best = sparsity::select_operating_point(points, c.sweep_max_deviation);

  write_config_comment(csv, c, "sweep");
  if (best)
    csv << "# selected: t_elem=" << fmt(best->t_elem) << " t_rowcount=" << best->t_rowcount
        << " row_sparsity=" << fmt(best->row_sparsity)
        << " output_deviation=" << fmt(best->output_deviation) << '\n';
  else
    csv << "# selected: none within max_deviation\n";
  sparsity::write_sweep_csv(csv, points);
}

void cmd_ablate(const RunConfig& c, std::ostream& csv, std::ostream& summary) {
  struct Rung {
    const char* name;
    nn::EngineKind engine;
    nn::ActivationKind activation;
    bool sparsity;
  };
  const std::array<Rung, 4> rungs{{
      {"float+softmax", nn::EngineKind::Reference, nn::ActivationKind::SoftmaxFloat, false},
      {"float+sigmoid-bias", nn::EngineKind::Reference, nn::ActivationKind::SigmoidBiasLUT, false},
      {"int+sigmoid-bias", nn::EngineKind::Integer, nn::ActivationKind::SigmoidBiasLUT, false},
      {"int+sigmoid-bias+sparsity", nn::EngineKind::Integer, nn::ActivationKind::SigmoidBiasLUT, true},
  }};

  auto bundle = resolve_bundle(c);
  const auto fps = load_inputs(c, bundle.header);
  const auto dims = perf::Dims::from_header(bundle.header);
  // The router does not depend on the rung, so every rung runs the same
  // scenario per snapshot.
  const Routing routing =
      route_all(c, *nn::make_engine(nn::EngineKind::Integer, bundle, c.bias_seq_len), fps);

  std::vector<std::vector<sparsity::Coord>> coords(rungs.size(), std::vector<sparsity::Coord>(fps.size()));
  std::vector<std::vector<double>> cycles(rungs.size(), std::vector<double>(fps.size()));
  for (std::size_t k = 0; k < rungs.size(); ++k) {
    bundle.header.activation = rungs[k].activation;
    const auto engine = nn::make_engine(rungs[k].engine, bundle, c.bias_seq_len);
    parallel_for(fps.size(), c.threads, [&](std::size_t i) {
      const Scenario s = routing.scenarios[i];
      const auto* sp = rungs[k].sparsity ? &c.sparsity[index_of(s)] : nullptr;
      const auto r = engine->run(fps[i], s, sp, c.ffn_residual);
      coords[k][i] = r.coord;
      cycles[k][i] = perf::pipeline_report(r.mask, s, rungs[k].activation, c.perf, dims).total_cycles;
    });
  }

  write_config_comment(csv, c, "ablate");
  csv << "snapshot,scenario,rung,name,x,y,cycles,deviation_prev,cycle_delta_prev\n";
  for (std::size_t i = 0; i < fps.size(); ++i) {
    for (std::size_t k = 0; k < rungs.size(); ++k) {
      csv << i << ',' << to_string(routing.scenarios[i]) << ',' << k + 1 << ',' << rungs[k].name
          << ',' << fmt(coords[k][i].x) << ',' << fmt(coords[k][i].y) << ',' << fmt(cycles[k][i])
          << ',';
      if (k > 0)
        csv << fmt(distance(coords[k][i], coords[k - 1][i])) << ','
            << fmt(cycles[k][i] - cycles[k - 1][i]);
      else
        csv << ',';
      csv << '\n';
    }
  }

  json out_rungs = json::array();
  for (std::size_t k = 0; k < rungs.size(); ++k) {
    double mean_cycles = 0.0;
    for (double v : cycles[k]) mean_cycles += v;
    if (!fps.empty()) mean_cycles /= static_cast<double>(fps.size());
    json rung_cfg = {{"engine", rungs[k].engine == nn::EngineKind::Integer ? "int" : "float"},
                     {"activation", nn::to_string(rungs[k].activation)},
                     {"sparsity", rungs[k].sparsity}};
    json entry = {{"rung", k + 1}, {"name", rungs[k].name}, {"config", rung_cfg},
                  {"mean_cycles", mean_cycles}};
    if (k > 0 && !fps.empty()) {
      entry["deviation_vs_prev"] = sparsity::output_deviation(coords[k - 1], coords[k]);
      entry["deviation_vs_baseline"] = sparsity::output_deviation(coords[0], coords[k]);
    } else {
      entry["deviation_vs_prev"] = nullptr;
      entry["deviation_vs_baseline"] = k == 0 && !fps.empty() ? json(0.0) : json(nullptr);
    }
    out_rungs.push_back(entry);
  }
  summary << json{{"config", to_json(c)}, {"snapshots", fps.size()}, {"rungs", out_rungs}}.dump(2)
          << '\n';
}

void cmd_perf(const RunConfig& c, std::ostream& js, std::ostream& csv) {
  perf::Dims dims;
  nn::ActivationKind kind = c.activation.value_or(nn::ActivationKind::SigmoidBiasLUT);
  if (!c.bundle.empty()) {
    const auto b = resolve_bundle(c);
    dims = perf::Dims::from_header(b.header);
    kind = b.header.activation;
  }
  std::vector<Scenario> scenarios;
  if (c.scenario)
    scenarios.push_back(*c.scenario);
  else
    scenarios.assign(kScenarios.begin(), kScenarios.end());

  json reports = json::array();
  write_config_comment(csv, c, "perf");
  perf::write_csv_header(csv);
  for (Scenario s : scenarios) {
    for (double f : c.perf_fractions) {
      const auto r = perf::pipeline_report(f, s, kind, c.perf, dims);
      json entry = perf::to_json(r);
      entry["skip_fraction"] = f;
      reports.push_back(entry);
      perf::write_csv_row(csv, f, r);
    }
  }
  js << json{{"config", to_json(c)}, {"params", perf::to_json(c.perf)}, {"reports", reports}}.dump(2)
     << '\n';
}

}  // namespace mimoloc::cli
