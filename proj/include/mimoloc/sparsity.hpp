// SPDX-License-Identifier: Apache-2.0
#pragma once

// Element thresholding (x < T_e becomes exact zero), per-row zero counting,
// and row skipping (Z_i > T_r). Both comparisons are strict.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "mimoloc/fxp.hpp"
#include "mimoloc/matrix.hpp"

namespace mimoloc::sparsity {

struct SparsityConfig {
  double t_elem = 0.0;            // T_e, amplitude
  std::size_t t_rowcount = 46;    // T_r, zero-count threshold

  /// Throws ConfigError unless t_elem >= 0 and t_rowcount <= row_length.
  void validate(std::size_t row_length = 46) const;
};

struct RowMask {
  std::vector<std::uint8_t> skip;         // 1 = row skipped
  std::vector<std::uint16_t> zero_counts;  // Z_i

  std::size_t rows() const noexcept { return skip.size(); }
  std::size_t skipped() const noexcept;
  std::size_t kept() const noexcept { return rows() - skipped(); }
  double skip_fraction() const noexcept;
  std::vector<std::size_t> kept_rows() const;

  /// Mask that keeps every row.
  static RowMask dense(std::size_t rows);
  /// Mask from explicit skip flags (zero counts left at 0).
  static RowMask from_skip(std::vector<std::uint8_t> skip);

  friend bool operator==(const RowMask&, const RowMask&) = default;
};

RealMatrix threshold_elements(RealMatrix x, double t_elem);
/// Compares codes against quantize(t_elem).
fxp::QTensor threshold_elements(fxp::QTensor x, double t_elem);

/// `x` must already be thresholded; counts exact zeros per row.
RowMask build_row_mask(const RealMatrix& x, const SparsityConfig& cfg);
RowMask build_row_mask(const fxp::QTensor& x, const SparsityConfig& cfg);

template <typename M>
struct Detection {
  M thresholded;
  RowMask mask;
};

/// Thresholding and mask generation fused into one pass over each row.
Detection<RealMatrix> detect(RealMatrix x, const SparsityConfig& cfg);
Detection<fxp::QTensor> detect(fxp::QTensor x, const SparsityConfig& cfg);

struct SparsityStats {
  double element_sparsity = 0.0;
  double row_sparsity = 0.0;      // mean skipped-row fraction
  double max_row_sparsity = 0.0;  // largest per-snapshot skipped fraction
  std::size_t snapshots = 0;
};

/// Throws ContractViolation on an empty batch. With `quantized`, detection
/// runs on Q8.8 codes as the integer engine sees them.
SparsityStats sparsity_stats(std::span<const RealMatrix> snapshots, const SparsityConfig& cfg,
                             bool quantized = false);

struct Coord {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Coord&, const Coord&) = default;
};

/// RMS Euclidean distance between paired outputs divided by the RMS
/// magnitude of the baseline outputs.
double output_deviation(std::span<const Coord> baseline, std::span<const Coord> candidate);

/// Runs inference on snapshot `index`; a null config means no thresholding
/// and no row skipping (the baseline).
using InferFn = std::function<Coord(std::size_t index, const SparsityConfig* cfg)>;

struct SweepPoint {
  double t_elem = 0.0;
  std::size_t t_rowcount = 0;
  double element_sparsity = 0.0;
  double row_sparsity = 0.0;
  double max_row_sparsity = 0.0;
  double output_deviation = 0.0;
};

/// Evaluates every (T_e, T_r) grid point; T_e-major order. Throws
/// ConfigError on an empty grid or batch.
std::vector<SweepPoint> sweep(std::span<const RealMatrix> snapshots,
                              std::span<const double> t_elem_grid,
                              std::span<const std::size_t> t_rowcount_grid, const InferFn& engine,
                              bool quantized = false);

/// The point with the highest row sparsity whose deviation stays within
/// `max_deviation` (ties: lower deviation, then grid order). Null when no
/// point qualifies.
const SweepPoint* select_operating_point(std::span<const SweepPoint> points,
                                         double max_deviation = 0.10);

/// Geometric grid from 0.001 to 0.1 and the full zero-count range 0..46.
std::vector<double> default_t_elem_grid(std::size_t points = 21);
std::vector<std::size_t> default_t_rowcount_grid();

void write_sweep_csv(std::ostream& os, std::span<const SweepPoint> points);

}  // namespace mimoloc::sparsity
