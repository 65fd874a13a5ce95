// SPDX-License-Identifier: Apache-2.0
#include "mimoloc/chansim.hpp"

#include <cmath>
#include <numbers>

#include "mimoloc/errors.hpp"
#include "mimoloc/rng.hpp"

namespace mimoloc::chansim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<std::size_t> pick_beams(const ScenarioProfile& p, Rng& rng) {
  std::vector<std::size_t> beams;
  beams.reserve(p.dominant_beams);
  if (p.clustered_beams) {
    // Contiguous cluster around a random centre: c, c+1, c-1, c+2, ...
    const std::size_t centre = rng.below(kBeams);
    for (std::size_t r = 0; beams.size() < p.dominant_beams; ++r) {
      const std::size_t step = (r + 1) / 2;
      const std::size_t b = (r % 2 == 1) ? (centre + step) % kBeams
                                         : (centre + kBeams - step % kBeams) % kBeams;
      beams.push_back(b);
    }
  } else {
    std::vector<std::size_t> pool(kBeams);
    for (std::size_t i = 0; i < kBeams; ++i) pool[i] = i;
    for (std::size_t i = 0; i < p.dominant_beams; ++i) {
      const std::size_t j = i + rng.below(kBeams - i);
      std::swap(pool[i], pool[j]);
      beams.push_back(pool[i]);
    }
  }
  return beams;
}

}  // namespace

void ScenarioProfile::validate() const {
  if (dominant_beams < 1 || dominant_beams > kBeams)
    throw ConfigError("profile: dominant_beams must be in [1, 128]");
  if (dominant_delays < 1 || dominant_delays > kDelayBins)
    throw ConfigError("profile: dominant_delays must be in [1, 46]");
  if (!(diffuse_floor >= 0.0)) throw ConfigError("profile: diffuse_floor must be >= 0");
  if (!(path_gain >= 0.0) || !(delay_spread >= 0.0) || !(beam_decay >= 0.0) ||
      !(diffuse_shadowing_db >= 0.0))
    throw ConfigError("profile: gains, spreads and decays must be >= 0");
}

ScenarioProfile default_profile(Scenario s, std::uint64_t seed) {
  ScenarioProfile p;
  p.scenario = s;
  p.seed = seed;
  switch (s) {
    case Scenario::S1:  // LoS: a tight beam cluster, short delay support
      p.dominant_beams = 4;
      p.dominant_delays = 2;
      p.diffuse_floor = 0.2;
      p.diffuse_shadowing_db = 10.0;
      p.delay_spread = 2.0;
      p.beam_decay = 0.5;
      p.clustered_beams = true;
      break;
    case Scenario::S2:  // NLoS: energy scattered across beams and delays
      p.dominant_beams = 24;
      p.dominant_delays = 6;
      p.diffuse_floor = 0.4;
      p.diffuse_shadowing_db = 4.0;
      p.delay_spread = 5.0;
      p.beam_decay = 0.08;
      p.path_gain = 0.6;
      p.clustered_beams = false;
      break;
    case Scenario::S3:  // mixed: a cluster plus a wider multipath tail
      p.dominant_beams = 12;
      p.dominant_delays = 4;
      p.diffuse_floor = 0.6;
      p.diffuse_shadowing_db = 4.0;
      p.delay_spread = 4.0;
      p.beam_decay = 0.2;
      p.path_gain = 0.8;
      p.clustered_beams = true;
      break;
  }
  return p;
}

std::vector<double> hann_coefficients(std::size_t n, HannKind kind) {
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  const double denom = kind == HannKind::Symmetric ? static_cast<double>(n - 1)
                                                   : static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) w[j] = 0.5 * (1.0 - std::cos(kTwoPi * j / denom));
  return w;
}

FreqChannel generate_channel(const ScenarioProfile& p) {
  p.validate();
  Rng rng(p.seed);
  FreqChannel h{ComplexMatrix(kBeams, kSubcarriers)};
  const double n = static_cast<double>(kSubcarriers);

  const auto beams = pick_beams(p, rng);

  std::vector<double> delays(p.dominant_delays);
  delays[0] = rng.uniform(0.0, p.delay_spread);
  for (std::size_t q = 1; q < delays.size(); ++q)
    delays[q] = delays[q - 1] + rng.uniform(1.0, std::max(1.0, p.delay_spread));
  for (double& d : delays) d = std::fmod(d, n);

  for (std::size_t rank = 0; rank < beams.size(); ++rank) {
    const double beam_amp = p.path_gain * std::exp(-p.beam_decay * static_cast<double>(rank));
    auto row = h.values.row(beams[rank]);
    for (std::size_t q = 0; q < delays.size(); ++q) {
      const double amp = beam_amp * std::exp(-0.5 * static_cast<double>(q)) * rng.uniform(0.6, 1.0);
      const Complex g = std::polar(amp, rng.uniform(0.0, kTwoPi));
      // A path at delay tau is a linear phase ramp across subcarriers.
      for (std::size_t k = 0; k < kSubcarriers; ++k)
        row[k] += g * std::polar(1.0, -kTwoPi * static_cast<double>(k) * delays[q] / n);
    }
  }

  if (p.diffuse_floor > 0.0) {
    const double scale = p.diffuse_floor / std::numbers::sqrt2;
    for (std::size_t b = 0; b < kBeams; ++b) {
      const double shadow = std::pow(10.0, p.diffuse_shadowing_db * rng.normal() / 20.0);
      auto row = h.values.row(b);
      for (std::size_t k = 0; k < kSubcarriers; ++k) {
        const double re = rng.normal();
        const double im = rng.normal();
        row[k] += scale * shadow * Complex(re, im);
      }
    }
  }
  return h;
}

FreqChannel hann_window(const FreqChannel& h, HannKind kind) {
  const auto w = hann_coefficients(h.values.cols(), kind);
  FreqChannel out = h;
  for (std::size_t r = 0; r < out.values.rows(); ++r) {
    auto row = out.values.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] *= w[j];
  }
  return out;
}

Fingerprint beam_delay_transform(const FreqChannel& h) {
  const std::size_t n = h.values.cols();
  Fingerprint g{RealMatrix(h.values.rows(), n)};
  if (n == 0) return g;
  // twiddle[m] = exp(+j 2 pi m / N); index (k * t) mod N keeps it exact.
  std::vector<Complex> twiddle(n);
  for (std::size_t m = 0; m < n; ++m)
    twiddle[m] = std::polar(1.0, kTwoPi * static_cast<double>(m) / static_cast<double>(n));
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t r = 0; r < h.values.rows(); ++r) {
    auto in = h.values.row(r);
    auto out = g.values.row(r);
    for (std::size_t t = 0; t < n; ++t) {
      Complex acc{0.0, 0.0};
      for (std::size_t k = 0; k < n; ++k) acc += in[k] * twiddle[(k * t) % n];
      out[t] = std::abs(acc * inv_n);
    }
  }
  return g;
}

Fingerprint preprocess(const FreqChannel& h, HannKind kind) {
  return beam_delay_transform(hann_window(h, kind));
}

std::vector<Fingerprint> generate_batch(ScenarioProfile profile, std::size_t count,
                                        HannKind kind) {
  std::vector<Fingerprint> out;
  out.reserve(count);
  const std::uint64_t base = profile.seed;
  for (std::size_t i = 0; i < count; ++i) {
    profile.seed = base + i;
    out.push_back(preprocess(generate_channel(profile), kind));
  }
  return out;
}

}  // namespace mimoloc::chansim
