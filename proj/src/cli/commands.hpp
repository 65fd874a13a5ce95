// SPDX-License-Identifier: Apache-2.0
#pragma once

// Subcommand bodies. Each is a pure function of (config, input files) and
// writes its artifacts to the given streams; the front end owns the files.

#include <iosfwd>
#include <string>
#include <vector>

#include "cli/config.hpp"
#include "mimoloc/nn/bundle.hpp"

namespace mimoloc::cli {

/// Loads paths.bundle, or builds the seeded random bundle (snapped to the
/// Q8.8 grid) when the path is empty. Applies the activation override.
nn::ModelBundle resolve_bundle(const RunConfig& c);

/// Snapshots for all generate segments, seeds generate_seed + global index.
/// `labels` receives the generating scenario of each snapshot.
std::vector<RealMatrix> generate_snapshots(const RunConfig& c, std::vector<Scenario>* labels = nullptr);

/// Writes the fingerprint container; `sidecar` gets the config snapshot and
/// the per-snapshot scenario labels as JSON.
void cmd_generate(const RunConfig& c, std::ostream& fingerprints, std::ostream& sidecar);

/// Per-snapshot results CSV.
void cmd_infer(const RunConfig& c, std::ostream& csv);

/// Sweep CSV over the configured grids, with the selected operating point
/// in a comment line.
void cmd_sweep(const RunConfig& c, std::ostream& csv);

/// Ablation ladder: per-snapshot CSV and a JSON summary per rung.
void cmd_ablate(const RunConfig& c, std::ostream& csv, std::ostream& summary);

/// Cycle reports over the mask-fraction grid, JSON and CSV.
void cmd_perf(const RunConfig& c, std::ostream& json, std::ostream& csv);

}  // namespace mimoloc::cli
