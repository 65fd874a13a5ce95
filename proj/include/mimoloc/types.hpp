// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace mimoloc {

/// Beam tokens per snapshot (4 polarisation/antenna-pair blocks of 32 beams).
inline constexpr std::size_t kBeams = 128;
/// Subcarriers after reduction, equal to the number of delay bins.
inline constexpr std::size_t kSubcarriers = 46;
inline constexpr std::size_t kDelayBins = kSubcarriers;

/// Propagation scenario / specialised model id.
enum class Scenario : int { S1 = 0, S2 = 1, S3 = 2 };
inline constexpr std::array<Scenario, 3> kScenarios{Scenario::S1, Scenario::S2, Scenario::S3};

constexpr std::size_t index_of(Scenario s) noexcept { return static_cast<std::size_t>(s); }

constexpr std::string_view to_string(Scenario s) noexcept {
  switch (s) {
    case Scenario::S1:
      return "S1";
    case Scenario::S2:
      return "S2";
    case Scenario::S3:
      return "S3";
  }
  return "?";
}

constexpr std::optional<Scenario> parse_scenario(std::string_view s) noexcept {
  if (s == "S1" || s == "s1") return Scenario::S1;
  if (s == "S2" || s == "s2") return Scenario::S2;
  if (s == "S3" || s == "s3") return Scenario::S3;
  return std::nullopt;
}

/// Encoder layers of the specialised model for a scenario.
constexpr std::size_t encoder_layers(Scenario s) noexcept { return s == Scenario::S1 ? 1 : 2; }

}  // namespace mimoloc
