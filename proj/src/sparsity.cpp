// SPDX-License-Identifier: Apache-2.0
#include "mimoloc/sparsity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "mimoloc/errors.hpp"
#include "mimoloc/simd.hpp"

namespace mimoloc::sparsity {

namespace {

std::span<std::int16_t> codes(std::span<fxp::QVal> v) noexcept {
  return {reinterpret_cast<std::int16_t*>(v.data()), v.size()};
}

std::span<const std::int16_t> codes(std::span<const fxp::QVal> v) noexcept {
  return {reinterpret_cast<const std::int16_t*>(v.data()), v.size()};
}

RowMask mask_from_counts(std::vector<std::uint16_t> counts, std::size_t t_rowcount) {
  RowMask m;
  m.skip.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) m.skip[i] = counts[i] > t_rowcount ? 1 : 0;
  m.zero_counts = std::move(counts);
  return m;
}

}  // namespace

void SparsityConfig::validate(std::size_t row_length) const {
  if (!(t_elem >= 0.0) || !std::isfinite(t_elem))
    throw ConfigError("sparsity: t_elem must be a finite value >= 0");
  if (t_rowcount > row_length)
    throw ConfigError("sparsity: t_rowcount must be in [0, " + std::to_string(row_length) + "]");
}

std::size_t RowMask::skipped() const noexcept {
  return static_cast<std::size_t>(std::count(skip.begin(), skip.end(), std::uint8_t{1}));
}

double RowMask::skip_fraction() const noexcept {
  return skip.empty() ? 0.0 : static_cast<double>(skipped()) / static_cast<double>(rows());
}

std::vector<std::size_t> RowMask::kept_rows() const {
  std::vector<std::size_t> out;
  out.reserve(rows());
  for (std::size_t i = 0; i < skip.size(); ++i)
    if (!skip[i]) out.push_back(i);
  return out;
}

RowMask RowMask::dense(std::size_t rows) {
  return RowMask{std::vector<std::uint8_t>(rows, 0), std::vector<std::uint16_t>(rows, 0)};
}

RowMask RowMask::from_skip(std::vector<std::uint8_t> skip) {
  RowMask m;
  m.zero_counts.assign(skip.size(), 0);
  m.skip = std::move(skip);
  return m;
}

RealMatrix threshold_elements(RealMatrix x, double t_elem) {
  for (std::size_t r = 0; r < x.rows(); ++r) simd::threshold_f64(x.row(r), t_elem);
  return x;
}

fxp::QTensor threshold_elements(fxp::QTensor x, double t_elem) {
  const std::int16_t t = fxp::quantize(t_elem).code;
  for (std::size_t r = 0; r < x.rows(); ++r) simd::threshold_i16(codes(x.row(r)), t);
  return x;
}

RowMask build_row_mask(const RealMatrix& x, const SparsityConfig& cfg) {
  std::vector<std::uint16_t> counts(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    counts[r] = static_cast<std::uint16_t>(std::count(row.begin(), row.end(), 0.0));
  }
  return mask_from_counts(std::move(counts), cfg.t_rowcount);
}

RowMask build_row_mask(const fxp::QTensor& x, const SparsityConfig& cfg) {
  std::vector<std::uint16_t> counts(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r)
    counts[r] = static_cast<std::uint16_t>(simd::count_zeros_i16(codes(x.row(r))));
  return mask_from_counts(std::move(counts), cfg.t_rowcount);
}

Detection<RealMatrix> detect(RealMatrix x, const SparsityConfig& cfg) {
  std::vector<std::uint16_t> counts(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r)
    counts[r] = static_cast<std::uint16_t>(simd::threshold_f64(x.row(r), cfg.t_elem));
  return {std::move(x), mask_from_counts(std::move(counts), cfg.t_rowcount)};
}

Detection<fxp::QTensor> detect(fxp::QTensor x, const SparsityConfig& cfg) {
  const std::int16_t t = fxp::quantize(cfg.t_elem).code;
  std::vector<std::uint16_t> counts(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r)
    counts[r] = static_cast<std::uint16_t>(simd::threshold_i16(codes(x.row(r)), t));
  return {std::move(x), mask_from_counts(std::move(counts), cfg.t_rowcount)};
}

SparsityStats sparsity_stats(std::span<const RealMatrix> snapshots, const SparsityConfig& cfg,
                             bool quantized) {
  expects(!snapshots.empty(), "sparsity_stats: empty snapshot batch");
  SparsityStats st;
  std::size_t zeros = 0;
  std::size_t total = 0;
  double row_sum = 0.0;
  for (const auto& s : snapshots) {
    const RowMask mask =
        quantized ? detect(fxp::quantize(s), cfg).mask : detect(s, cfg).mask;
    zeros += std::accumulate(mask.zero_counts.begin(), mask.zero_counts.end(), std::size_t{0});
    total += s.size();
    const double frac = mask.skip_fraction();
    row_sum += frac;
    st.max_row_sparsity = std::max(st.max_row_sparsity, frac);
  }
  st.snapshots = snapshots.size();
  st.element_sparsity = total == 0 ? 0.0 : static_cast<double>(zeros) / static_cast<double>(total);
  st.row_sparsity = row_sum / static_cast<double>(snapshots.size());
  return st;
}

double output_deviation(std::span<const Coord> baseline, std::span<const Coord> candidate) {
  expects(baseline.size() == candidate.size(), "output_deviation: length mismatch");
  if (baseline.empty()) return 0.0;
  double err = 0.0;
  double mag = 0.0;
  for (std::size_t i = 0; i < baseline.size(); ++i) {
    const double dx = candidate[i].x - baseline[i].x;
    const double dy = candidate[i].y - baseline[i].y;
    err += dx * dx + dy * dy;
    mag += baseline[i].x * baseline[i].x + baseline[i].y * baseline[i].y;
  }
  if (mag == 0.0) return err == 0.0 ? 0.0 : INFINITY;
  return std::sqrt(err / mag);
}

std::vector<SweepPoint> sweep(std::span<const RealMatrix> snapshots,
                              std::span<const double> t_elem_grid,
                              std::span<const std::size_t> t_rowcount_grid, const InferFn& engine,
                              bool quantized) {
  if (t_elem_grid.empty() || t_rowcount_grid.empty())
    throw ConfigError("sweep: threshold grids must not be empty");
  if (snapshots.empty()) throw ConfigError("sweep: no snapshots");
  const std::size_t row_len = snapshots.front().cols();
  for (double te : t_elem_grid) SparsityConfig{te, 0}.validate(row_len);
  for (std::size_t tr : t_rowcount_grid) SparsityConfig{0.0, tr}.validate(row_len);

  std::vector<Coord> baseline(snapshots.size());
  for (std::size_t i = 0; i < snapshots.size(); ++i) baseline[i] = engine(i, nullptr);

  std::vector<SweepPoint> out;
  out.reserve(t_elem_grid.size() * t_rowcount_grid.size());
  std::vector<Coord> outputs(snapshots.size());
  for (double te : t_elem_grid) {
    for (std::size_t tr : t_rowcount_grid) {
      const SparsityConfig cfg{te, tr};
      const SparsityStats st = sparsity_stats(snapshots, cfg, quantized);
      for (std::size_t i = 0; i < snapshots.size(); ++i) outputs[i] = engine(i, &cfg);
      out.push_back({te, tr, st.element_sparsity, st.row_sparsity, st.max_row_sparsity,
                     output_deviation(baseline, outputs)});
    }
  }
  return out;
}

const SweepPoint* select_operating_point(std::span<const SweepPoint> points,
                                         double max_deviation) {
  const SweepPoint* best = nullptr;
  for (const auto& p : points) {
    if (!(p.output_deviation <= max_deviation)) continue;
    if (best == nullptr || p.row_sparsity > best->row_sparsity ||
        (p.row_sparsity == best->row_sparsity && p.output_deviation < best->output_deviation))
      best = &p;
  }
  return best;
}

std::vector<double> default_t_elem_grid(std::size_t points) {
  std::vector<double> g;
  if (points == 0) return g;
  if (points == 1) return {0.001};
  g.reserve(points);
  for (std::size_t i = 0; i < points; ++i)
    g.push_back(0.001 * std::pow(100.0, static_cast<double>(i) / static_cast<double>(points - 1)));
  return g;
}

std::vector<std::size_t> default_t_rowcount_grid() {
  std::vector<std::size_t> g(47);
  std::iota(g.begin(), g.end(), std::size_t{0});
  return g;
}

void write_sweep_csv(std::ostream& os, std::span<const SweepPoint> points) {
  os << "t_elem,t_rowcount,element_sparsity,row_sparsity,max_row_sparsity,output_deviation\n";
  char buf[256];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.9g,%zu,%.9g,%.9g,%.9g,%.9g\n", p.t_elem, p.t_rowcount,
                  p.element_sparsity, p.row_sparsity, p.max_row_sparsity, p.output_deviation);
    os << buf;
  }
}

}  // namespace mimoloc::sparsity
