// SPDX-License-Identifier: Apache-2.0
// mimoloc: command-line front end.
//
//   mimoloc generate | infer | sweep | ablate | perf | show-config | make-bundle
//
// Exit codes: 0 ok, 2 configuration error, 3 I/O error, 4 contract violation.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "mimoloc/errors.hpp"
#include "mimoloc/io.hpp"
#include "mimoloc/nn/bundle.hpp"

namespace {

using namespace mimoloc;
using nlohmann::json;

struct Common {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::string> bundle, fingerprints, out_dir, scenario, engine, activation;
  std::optional<std::size_t> window, threads;
  std::optional<std::uint64_t> seed;
  bool no_sparsity = false;
  bool ffn_residual = false;
};

void add_common(CLI::App* sub, Common& o) {
  sub->add_option("-c,--config", o.config_path, "JSON run configuration");
  sub->add_option("--set", o.sets, "Override a config key: dotted.path=value (repeatable)");
  sub->add_option("--bundle", o.bundle, "Weight bundle (empty: seeded random bundle)");
  sub->add_option("--fingerprints", o.fingerprints, "Fingerprint file");
  sub->add_option("--out-dir", o.out_dir, "Output directory");
  sub->add_option("--scenario", o.scenario, "S1, S2, S3 or auto");
  sub->add_option("--engine", o.engine, "float, int or both");
  sub->add_option("--activation", o.activation, "Activation kind or 'bundle'");
  sub->add_option("--window", o.window, "Router majority window");
  sub->add_option("--threads", o.threads, "Worker threads (0: all cores)");
  sub->add_option("--seed", o.seed, "Generator seed");
  sub->add_flag("--no-sparsity", o.no_sparsity, "Disable thresholding and row skipping");
  sub->add_flag("--ffn-residual", o.ffn_residual, "Add a residual around the FFN");
}

std::string quoted(const std::string& s) { return json(s).dump(); }

cli::RunConfig build_config(const Common& o, const std::vector<std::string>& extra_sets) {
  json tree = cli::to_json(cli::RunConfig{});
  if (!o.config_path.empty()) {
    std::ifstream is(o.config_path);
    if (!is) throw IoError("cannot open config '" + o.config_path + "'");
    try {
      tree.merge_patch(json::parse(is));
    } catch (const json::exception& e) {
      throw ConfigError("config '" + o.config_path + "': " + e.what());
    }
  }
  std::vector<std::string> sets;
  if (o.bundle) sets.push_back("paths.bundle=" + quoted(*o.bundle));
  if (o.fingerprints) sets.push_back("paths.fingerprints=" + quoted(*o.fingerprints));
  if (o.out_dir) sets.push_back("paths.output_dir=" + quoted(*o.out_dir));
  if (o.scenario) sets.push_back("scenario=" + quoted(*o.scenario));
  if (o.engine) sets.push_back("engine=" + quoted(*o.engine));
  if (o.activation) sets.push_back("activation=" + quoted(*o.activation));
  if (o.window) sets.push_back("router.window=" + std::to_string(*o.window));
  if (o.threads) sets.push_back("threads=" + std::to_string(*o.threads));
  if (o.seed) sets.push_back("seeds.generate=" + std::to_string(*o.seed));
  if (o.no_sparsity) sets.push_back("sparsity.enabled=false");
  if (o.ffn_residual) sets.push_back("model.ffn_residual=true");
  sets.insert(sets.end(), extra_sets.begin(), extra_sets.end());
  sets.insert(sets.end(), o.sets.begin(), o.sets.end());
  for (const auto& s : sets) cli::apply_override(tree, s);
  return cli::config_from_json(tree);
}

std::ofstream open_out(const std::filesystem::path& p, bool binary = false) {
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + p.parent_path().string() + "'");
  }
  std::ofstream os(p, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!os) throw IoError("cannot open '" + p.string() + "' for writing");
  return os;
}

void finish(std::ofstream& os, const std::filesystem::path& p) {
  os.flush();
  if (!os) throw IoError("write to '" + p.string() + "' failed");
  std::cout << "wrote " << p.string() << '\n';
}

int run(int argc, char** argv) {
  CLI::App app{"Sparsity-aware integer transformer localisation model"};
  app.require_subcommand(1);

  Common common;
  std::optional<std::size_t> count;
  std::optional<std::string> out;
  std::optional<std::string> csv_out;
  std::string precision = "int16";

  auto* gen = app.add_subcommand("generate", "Generate synthetic beam-delay fingerprints");
  add_common(gen, common);
  gen->add_option("--count", count, "Snapshots (single segment of --scenario)");
  gen->add_option("-o,--out", out, "Fingerprint file (default: paths.fingerprints)");
  gen->add_option("--csv", csv_out, "Also write the fingerprints as CSV");

  auto* infer = app.add_subcommand("infer", "Run inference over a fingerprint file");
  add_common(infer, common);
  infer->add_option("-o,--out", out, "Results CSV (default: <out-dir>/infer.csv)");

  auto* sweep = app.add_subcommand("sweep", "Sweep element and zero-count thresholds");
  add_common(sweep, common);
  sweep->add_option("-o,--out", out, "Sweep CSV (default: <out-dir>/sweep.csv)");

  auto* ablate = app.add_subcommand("ablate", "Ablation ladder of the optimisations");
  add_common(ablate, common);

  auto* perf = app.add_subcommand("perf", "Cycle model over a mask-fraction grid");
  add_common(perf, common);

  auto* show = app.add_subcommand("show-config", "Print the effective configuration");
  add_common(show, common);

  auto* mkb = app.add_subcommand("make-bundle", "Write the seeded random weight bundle");
  add_common(mkb, common);
  mkb->add_option("-o,--out", out, "Bundle file")->required();
  mkb->add_option("--precision", precision, "int16 or float32")
      ->check(CLI::IsMember({"int16", "float32"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  std::vector<std::string> extra;
  if (gen->parsed() && (count || common.scenario)) {
    // For generate, --scenario/--count describe the single segment to emit.
    const std::string scen = common.scenario.value_or("S1");
    common.scenario.reset();
    extra.push_back("generate.segments=[{\"scenario\":" + quoted(scen) +
                    ",\"count\":" + std::to_string(count.value_or(100)) + "}]");
  }
  const cli::RunConfig cfg = build_config(common, extra);
  const std::filesystem::path dir = cfg.output_dir;

  if (show->parsed()) {
    std::cout << cli::to_json(cfg).dump(2) << '\n';
  } else if (gen->parsed()) {
    const std::filesystem::path p =
        out ? *out : (cfg.fingerprints.empty() ? (dir / "fingerprints.bdfp").string() : cfg.fingerprints);
    auto fp = open_out(p, true);
    const std::filesystem::path side = p.string() + ".json";
    auto sc = open_out(side);
    cli::cmd_generate(cfg, fp, sc);
    finish(fp, p);
    finish(sc, side);
    if (csv_out) {
      const std::filesystem::path cp = *csv_out;
      auto cs = open_out(cp);
      io::write_fingerprints_csv(cs, cli::generate_snapshots(cfg));
      finish(cs, cp);
    }
  } else if (infer->parsed()) {
    const std::filesystem::path p = out ? std::filesystem::path(*out) : dir / "infer.csv";
    auto os = open_out(p);
    cli::cmd_infer(cfg, os);
    finish(os, p);
  } else if (sweep->parsed()) {
    const std::filesystem::path p = out ? std::filesystem::path(*out) : dir / "sweep.csv";
    auto os = open_out(p);
    cli::cmd_sweep(cfg, os);
    finish(os, p);
  } else if (ablate->parsed()) {
    const auto pc = dir / "ablate.csv", pj = dir / "ablate.json";
    auto cs = open_out(pc);
    auto js = open_out(pj);
    cli::cmd_ablate(cfg, cs, js);
    finish(cs, pc);
    finish(js, pj);
  } else if (perf->parsed()) {
    const auto pj = dir / "perf.json", pc = dir / "perf.csv";
    auto js = open_out(pj);
    auto cs = open_out(pc);
    cli::cmd_perf(cfg, js, cs);
    finish(js, pj);
    finish(cs, pc);
  } else if (mkb->parsed()) {
    const auto b = cli::resolve_bundle(cfg);
    nn::save_bundle(*out, b, precision == "int16" ? nn::Precision::Int16 : nn::Precision::Float32);
    std::cout << "wrote " << *out << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const mimoloc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const mimoloc::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  } catch (const mimoloc::ContractViolation& e) {
    std::cerr << "contract violation: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
