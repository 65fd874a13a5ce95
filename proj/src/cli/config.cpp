// SPDX-License-Identifier: Apache-2.0
#include "cli/config.hpp"

#include <fstream>
#include <set>

#include "mimoloc/errors.hpp"

namespace mimoloc::cli {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    if (!allowed.contains(k)) throw ConfigError("unknown config key '" + where + "." + k + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  out = j.at(key).get<T>();
}

EngineChoice parse_engine(const std::string& s) {
  if (s == "float") return EngineChoice::Float;
  if (s == "int") return EngineChoice::Int;
  if (s == "both") return EngineChoice::Both;
  throw ConfigError("engine must be float, int or both (got '" + s + "')");
}

Scenario scenario_or_throw(const std::string& s) {
  if (auto v = parse_scenario(s)) return *v;
  throw ConfigError("unknown scenario '" + s + "'");
}

}  // namespace

std::string_view to_string(EngineChoice e) noexcept {
  switch (e) {
    case EngineChoice::Float: return "float";
    case EngineChoice::Int: return "int";
    case EngineChoice::Both: return "both";
  }
  return "?";
}

void RunConfig::validate() const {
  for (const auto& s : sparsity) s.validate();
  if (window < 1) throw ConfigError("router.window must be >= 1");
  if (bias_seq_len < 1) throw ConfigError("model.bias_seq_len must be >= 1");
  if (!(bundle_scale > 0.0)) throw ConfigError("seeds.bundle_scale must be positive");
  for (const auto& s : segments)
    if (s.count > 1000000) throw ConfigError("generate segment count is implausibly large");
  for (double t : sweep_t_elem)
    if (!(t >= 0.0)) throw ConfigError("sweep.t_elem entries must be >= 0");
  for (std::size_t t : sweep_t_rowcount)
    if (t > kDelayBins) throw ConfigError("sweep.t_rowcount entries must be <= 46");
  for (double f : perf_fractions)
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("perf.fractions entries must be in [0, 1]");
  perf.validate();
  for (Scenario s : kScenarios) profile_for(*this, s, generate_seed).validate();
}

json to_json(const RunConfig& c) {
  json sp = json::object();
  sp["enabled"] = c.sparsity_enabled;
  for (Scenario s : kScenarios) {
    const auto& t = c.sparsity[index_of(s)];
    sp[std::string(to_string(s))] = {{"t_elem", t.t_elem}, {"t_rowcount", t.t_rowcount}};
  }
  json segs = json::array();
  for (const auto& s : c.segments) segs.push_back({{"scenario", to_string(s.scenario)}, {"count", s.count}});
  json perf = perf::to_json(c.perf);
  perf["fractions"] = c.perf_fractions;
  return json{
      {"paths", {{"bundle", c.bundle}, {"fingerprints", c.fingerprints}, {"output_dir", c.output_dir}}},
      {"scenario", c.scenario ? std::string(to_string(*c.scenario)) : "auto"},
      {"sparsity", sp},
      {"activation", c.activation ? std::string(nn::to_string(*c.activation)) : "bundle"},
      {"engine", to_string(c.engine)},
      {"router", {{"window", c.window}}},
      {"model", {{"ffn_residual", c.ffn_residual}, {"bias_seq_len", c.bias_seq_len}}},
      {"threads", c.threads},
      {"seeds", {{"generate", c.generate_seed}, {"bundle", c.bundle_seed}, {"bundle_scale", c.bundle_scale}}},
      {"generate",
       {{"segments", segs},
        {"hann", c.hann == chansim::HannKind::Symmetric ? "symmetric" : "periodic"},
        {"profiles", c.profile_overrides}}},
      {"sweep",
       {{"t_elem", c.sweep_t_elem},
        {"t_rowcount", c.sweep_t_rowcount},
        {"max_deviation", c.sweep_max_deviation}}},
      {"perf", perf},
  };
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  try {
    reject_unknown(j, {"paths", "scenario", "sparsity", "activation", "engine", "router", "model",
                       "threads", "seeds", "generate", "sweep", "perf"},
                   "config");
    if (j.contains("paths")) {
      const auto& p = j["paths"];
      reject_unknown(p, {"bundle", "fingerprints", "output_dir"}, "paths");
      read(p, "bundle", c.bundle);
      read(p, "fingerprints", c.fingerprints);
      read(p, "output_dir", c.output_dir);
    }
    if (j.contains("scenario")) {
      const auto s = j["scenario"].get<std::string>();
      c.scenario = s == "auto" ? std::nullopt : std::optional(scenario_or_throw(s));
    }
    if (j.contains("sparsity")) {
      const auto& sp = j["sparsity"];
      reject_unknown(sp, {"enabled", "S1", "S2", "S3"}, "sparsity");
      read(sp, "enabled", c.sparsity_enabled);
      for (Scenario s : kScenarios) {
        const std::string key(to_string(s));
        if (!sp.contains(key)) continue;
        const auto& t = sp[key];
        reject_unknown(t, {"t_elem", "t_rowcount"}, "sparsity." + key);
        auto& dst = c.sparsity[index_of(s)];
        read(t, "t_elem", dst.t_elem);
        read(t, "t_rowcount", dst.t_rowcount);
      }
    }
    if (j.contains("activation")) {
      const auto a = j["activation"].get<std::string>();
      c.activation = a == "bundle" ? std::nullopt : std::optional(nn::parse_activation(a));
    }
    if (j.contains("engine")) c.engine = parse_engine(j["engine"].get<std::string>());
    if (j.contains("router")) {
      reject_unknown(j["router"], {"window"}, "router");
      read(j["router"], "window", c.window);
    }
    if (j.contains("model")) {
      reject_unknown(j["model"], {"ffn_residual", "bias_seq_len"}, "model");
      read(j["model"], "ffn_residual", c.ffn_residual);
      read(j["model"], "bias_seq_len", c.bias_seq_len);
    }
    read(j, "threads", c.threads);
    if (j.contains("seeds")) {
      reject_unknown(j["seeds"], {"generate", "bundle", "bundle_scale"}, "seeds");
      read(j["seeds"], "generate", c.generate_seed);
      read(j["seeds"], "bundle", c.bundle_seed);
      read(j["seeds"], "bundle_scale", c.bundle_scale);
    }
    if (j.contains("generate")) {
      const auto& g = j["generate"];
      reject_unknown(g, {"segments", "hann", "profiles"}, "generate");
      if (g.contains("segments")) {
        c.segments.clear();
        for (const auto& s : g["segments"]) {
          reject_unknown(s, {"scenario", "count"}, "generate.segments[]");
          GenerateSegment seg;
          if (s.contains("scenario")) seg.scenario = scenario_or_throw(s["scenario"].get<std::string>());
          read(s, "count", seg.count);
          c.segments.push_back(seg);
        }
      }
      if (g.contains("hann")) {
        const auto h = g["hann"].get<std::string>();
        if (h == "symmetric")
          c.hann = chansim::HannKind::Symmetric;
        else if (h == "periodic")
          c.hann = chansim::HannKind::Periodic;
        else
          throw ConfigError("generate.hann must be symmetric or periodic");
      }
      if (g.contains("profiles")) {
        const auto& pr = g["profiles"];
        reject_unknown(pr, {"S1", "S2", "S3"}, "generate.profiles");
        for (const auto& [k, v] : pr.items())
          reject_unknown(v,
                         {"dominant_beams", "dominant_delays", "diffuse_floor", "path_gain",
                          "beam_decay", "delay_spread", "diffuse_shadowing_db", "clustered_beams"},
                         "generate.profiles." + k);
        c.profile_overrides = pr;
      }
    }
    if (j.contains("sweep")) {
      const auto& s = j["sweep"];
      reject_unknown(s, {"t_elem", "t_rowcount", "max_deviation"}, "sweep");
      read(s, "t_elem", c.sweep_t_elem);
      read(s, "t_rowcount", c.sweep_t_rowcount);
      read(s, "max_deviation", c.sweep_max_deviation);
    }
    if (j.contains("perf")) {
      json p = j["perf"];
      if (p.contains("fractions")) {
        c.perf_fractions = p["fractions"].get<std::vector<double>>();
        p.erase("fractions");
      }
      c.perf = perf::params_from_json(p, c.perf);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

void apply_override(json& tree, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }

  json* node = &tree;
  std::size_t start = 0;
  std::vector<std::string> parts;
  while (start <= path.size()) {
    const auto dot = path.find('.', start);
    parts.push_back(path.substr(start, dot == std::string::npos ? std::string::npos : dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  // Profile overrides are sparse, so their keys may be created.
  const bool creatable = parts.size() >= 2 && parts[0] == "generate" && parts[1] == "profiles";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& key = parts[i];
    if (key.empty()) throw ConfigError("override path '" + path + "' has an empty component");
    if (creatable && node->is_null()) *node = json::object();
    if (!node->is_object()) throw ConfigError("override path '" + path + "' is not an object path");
    if (!node->contains(key) && !creatable)
      throw ConfigError("unknown config key '" + path + "'");
    node = &(*node)[key];
  }
  *node = value;
}

chansim::ScenarioProfile profile_for(const RunConfig& c, Scenario s, std::uint64_t seed) {
  auto p = chansim::default_profile(s, seed);
  const std::string key(to_string(s));
  if (!c.profile_overrides.contains(key)) return p;
  const auto& o = c.profile_overrides[key];
  try {
    read(o, "dominant_beams", p.dominant_beams);
    read(o, "dominant_delays", p.dominant_delays);
    read(o, "diffuse_floor", p.diffuse_floor);
    read(o, "path_gain", p.path_gain);
    read(o, "beam_decay", p.beam_decay);
    read(o, "delay_spread", p.delay_spread);
    read(o, "diffuse_shadowing_db", p.diffuse_shadowing_db);
    read(o, "clustered_beams", p.clustered_beams);
  } catch (const json::exception& e) {
    throw ConfigError("generate.profiles." + key + ": " + e.what());
  }
  return p;
}

}  // namespace mimoloc::cli
