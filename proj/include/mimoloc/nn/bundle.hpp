// SPDX-License-Identifier: Apache-2.0
#pragma once

// Learned parameters of the adaptive localisation network: SLP router, five
// encoder segments (S1, S21, S22, S31, S32) and one FCNN head per scenario.
// Values are held in double precision; integer bundles load as exact Q8.8
// grid values.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mimoloc/matrix.hpp"
#include "mimoloc/types.hpp"

namespace mimoloc::nn {

enum class ActivationKind : std::uint32_t {
  SoftmaxFloat = 0,
  SoftmaxInt = 1,
  SigmoidLUT = 2,
  SigmoidBiasLUT = 3,
  SigmoidNormLUT = 4,
};

std::string_view to_string(ActivationKind k) noexcept;
/// Accepts the enum names and the short forms softmax, softmax-int, sigmoid,
/// sigmoid-bias, sigmoid-norm. Throws ConfigError.
ActivationKind parse_activation(std::string_view s);

constexpr bool is_softmax(ActivationKind k) noexcept {
  return k == ActivationKind::SoftmaxFloat || k == ActivationKind::SoftmaxInt;
}

struct ModelHeader {
  std::uint32_t d = 46;       // features per token (delay bins)
  std::uint32_t n = 128;      // tokens (beams)
  std::uint32_t heads = 2;
  std::uint32_t d_ff = 64;
  std::uint32_t pool_k = 4;
  std::uint32_t pool_p = 2;
  std::uint32_t d_h = 64;     // FCNN hidden width
  ActivationKind activation = ActivationKind::SigmoidBiasLUT;
  std::uint32_t delay_bin = 0;  // SLP input column
  std::uint32_t window = 15;    // router majority window

  std::uint32_t d_k() const noexcept { return heads == 0 ? 0 : d / heads; }
  std::uint32_t pooled_width() const noexcept { return pool_k == 0 ? 0 : (d + pool_p) / pool_k; }
  std::uint32_t flat_len() const noexcept { return n * pooled_width(); }

  /// Throws ConfigError on inconsistent dimensions.
  void validate() const;
  friend bool operator==(const ModelHeader&, const ModelHeader&) = default;
};

struct SlpParams {
  RealMatrix w;               // 3 x n, logits = w x + b
  std::vector<double> b;      // 3
  friend bool operator==(const SlpParams&, const SlpParams&) = default;
};

/// One encoder layer. Right-hand weights are in math orientation
/// (x_row * W): wq/wk/wv/wo are d x d, w1 is d x d_ff, w2 is d_ff x d.
struct EncoderSegment {
  RealMatrix wq, wk, wv, wo;
  double gamma = 1.0;
  RealMatrix w1;
  std::vector<double> b1;
  RealMatrix w2;
  std::vector<double> b2;

  bool present() const noexcept { return !wq.empty(); }
  friend bool operator==(const EncoderSegment&, const EncoderSegment&) = default;
};

struct FcnnParams {
  RealMatrix w1;              // flat_len x d_h
  std::vector<double> b1;     // d_h
  RealMatrix w2;              // d_h x 2
  std::vector<double> b2;     // 2

  bool present() const noexcept { return !w1.empty(); }
  friend bool operator==(const FcnnParams&, const FcnnParams&) = default;
};

enum class SegmentId : std::size_t { S1 = 0, S21 = 1, S22 = 2, S31 = 3, S32 = 4 };
inline constexpr std::size_t kSegments = 5;

std::string_view to_string(SegmentId s) noexcept;
/// Segment executed by encoder layer `layer` (0-based) of a scenario.
SegmentId segment_for(Scenario s, std::size_t layer);

enum class Precision : std::uint32_t { Int16 = 0, Float32 = 1 };

struct ModelBundle {
  ModelHeader header;
  SlpParams slp;
  std::array<EncoderSegment, kSegments> segments;
  std::array<FcnnParams, 3> fcnn;

  const EncoderSegment& segment(SegmentId id) const { return segments[static_cast<std::size_t>(id)]; }
  EncoderSegment& segment(SegmentId id) { return segments[static_cast<std::size_t>(id)]; }

  /// True when every segment and the FCNN head of `s` are present.
  bool has_scenario(Scenario s) const noexcept;

  /// Checks all present matrices against the header dimensions. Throws
  /// ConfigError.
  void validate() const;

  friend bool operator==(const ModelBundle&, const ModelBundle&) = default;
};

/// Every weight and bias uniform in [-scale, scale]; gamma fixed at 1.
ModelBundle random_bundle(const ModelHeader& header, std::uint64_t seed, double scale = 0.25);

/// Copy with every parameter rounded to the Q8.8 grid (what an integer
/// bundle file would hold).
ModelBundle snap_to_q8_8(const ModelBundle& b);

// Binary file format ("AXLW"): see README. Little-endian throughout.
inline constexpr std::uint32_t kBundleVersion = 1;

void write_bundle(std::ostream& os, const ModelBundle& b, Precision precision);
ModelBundle read_bundle(std::istream& is, Precision* precision_out = nullptr);
void save_bundle(const std::string& path, const ModelBundle& b, Precision precision);
ModelBundle load_bundle(const std::string& path, Precision* precision_out = nullptr);

}  // namespace mimoloc::nn
