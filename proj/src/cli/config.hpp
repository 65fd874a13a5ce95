// SPDX-License-Identifier: Apache-2.0
#pragma once

// Run configuration: a JSON document with every knob of every subcommand.
// Unknown keys are rejected. `--set a.b.c=value` style overrides address
// the same tree.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mimoloc/chansim.hpp"
#include "mimoloc/nn/bundle.hpp"
#include "mimoloc/perf.hpp"
#include "mimoloc/sparsity.hpp"
#include "mimoloc/types.hpp"

namespace mimoloc::cli {

enum class EngineChoice { Float, Int, Both };

struct GenerateSegment {
  Scenario scenario = Scenario::S1;
  std::size_t count = 100;
};

struct RunConfig {
  // paths
  std::string bundle;        // empty: seeded random bundle
  std::string fingerprints;  // input for infer/sweep/ablate, output of generate
  std::string output_dir = "out";

  std::optional<Scenario> scenario;  // empty: route automatically
  std::array<sparsity::SparsityConfig, 3> sparsity{{{0.039, 41}, {0.014, 1}, {0.006, 28}}};
  bool sparsity_enabled = true;
  std::optional<nn::ActivationKind> activation;  // empty: bundle header
  EngineChoice engine = EngineChoice::Int;
  std::size_t window = 15;
  bool ffn_residual = false;
  std::size_t bias_seq_len = 128;
  std::size_t threads = 0;  // 0: hardware concurrency

  // seeds
  std::uint64_t generate_seed = 1;
  std::uint64_t bundle_seed = 7;
  double bundle_scale = 0.25;

  // generate
  std::vector<GenerateSegment> segments{GenerateSegment{}};
  chansim::HannKind hann = chansim::HannKind::Symmetric;
  /// Per-scenario profile overrides, as partial JSON objects.
  nlohmann::json profile_overrides = nlohmann::json::object();

  // sweep
  std::vector<double> sweep_t_elem = sparsity::default_t_elem_grid();
  std::vector<std::size_t> sweep_t_rowcount = sparsity::default_t_rowcount_grid();
  double sweep_max_deviation = 0.10;

  // perf
  perf::PerfParams perf = perf::calibrated_defaults();
  std::vector<double> perf_fractions{0.0,  0.05, 0.10, 0.15, 0.20, 0.25, 0.30,
                                     0.35, 0.40, 0.45, 0.50, 0.55, 0.60, 0.65};

  /// Throws ConfigError.
  void validate() const;
};

nlohmann::json to_json(const RunConfig& c);
/// Missing keys keep their defaults; unknown keys throw ConfigError.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

/// Applies "dotted.path=value"; the value is parsed as JSON, falling back
/// to a plain string. Throws ConfigError on unknown paths.
void apply_override(nlohmann::json& tree, const std::string& assignment);

/// Profile for a scenario with this config's seed and overrides applied.
chansim::ScenarioProfile profile_for(const RunConfig& c, Scenario s, std::uint64_t seed);

std::string_view to_string(EngineChoice e) noexcept;

}  // namespace mimoloc::cli
