// SPDX-License-Identifier: Apache-2.0
#pragma once

// Synthetic beam-space channels and the fingerprint preprocessing chain:
// Hann window over subcarriers, inverse DFT along subcarriers, magnitude.

#include <complex>
#include <cstdint>
#include <vector>

#include "mimoloc/matrix.hpp"
#include "mimoloc/types.hpp"

namespace mimoloc::chansim {

using Complex = std::complex<double>;
using ComplexMatrix = Matrix<Complex>;

/// Beam x subcarrier channel gains.
struct FreqChannel {
  ComplexMatrix values;
};

/// Beam x delay-bin amplitudes |G|, all entries >= 0.
struct Fingerprint {
  RealMatrix values;
};

/// Knobs of the synthetic generator. The first five fields carry the
/// energy-concentration structure; the rest shape how energy leaks into the
/// remaining beams.
struct ScenarioProfile {
  Scenario scenario = Scenario::S1;
  std::size_t dominant_beams = 4;
  std::size_t dominant_delays = 2;
  double diffuse_floor = 0.0;  // std-dev of the complex Gaussian diffuse term
  std::uint64_t seed = 1;

  double path_gain = 1.0;           // amplitude of the strongest path
  double beam_decay = 0.35;         // per-rank amplitude decay among dominant beams
  double delay_spread = 3.0;        // max spacing between successive path delays (bins)
  double diffuse_shadowing_db = 0;  // per-beam log-normal spread of the diffuse floor
  bool clustered_beams = true;      // LoS-like contiguous cluster vs scattered beams

  void validate() const;
};

/// Defaults for the three scenario regimes (S1 LoS, S2 NLoS, S3 mixed).
ScenarioProfile default_profile(Scenario s, std::uint64_t seed);

enum class HannKind { Symmetric, Periodic };

std::vector<double> hann_coefficients(std::size_t n, HannKind kind = HannKind::Symmetric);

/// Deterministic for a fixed profile (seed included). Output is 128 x 46.
FreqChannel generate_channel(const ScenarioProfile& profile);

FreqChannel hann_window(const FreqChannel& h, HannKind kind = HannKind::Symmetric);

/// Per-row inverse DFT with 1/N normalisation, then element-wise magnitude.
Fingerprint beam_delay_transform(const FreqChannel& h);

/// beam_delay_transform(hann_window(h)).
Fingerprint preprocess(const FreqChannel& h, HannKind kind = HannKind::Symmetric);

/// Convenience: generate `count` snapshots with seeds seed, seed+1, ...
std::vector<Fingerprint> generate_batch(ScenarioProfile profile, std::size_t count,
                                        HannKind kind = HannKind::Symmetric);

}  // namespace mimoloc::chansim
