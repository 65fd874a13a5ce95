// SPDX-License-Identifier: Apache-2.0
#pragma once

// Fingerprint container, little-endian: magic "BDFP", u32 count, then per
// snapshot 128 x 46 float32 values in row-major order.

#include <iosfwd>
#include <string>
#include <vector>

#include "mimoloc/matrix.hpp"

namespace mimoloc::io {

/// Throws ContractViolation unless every snapshot is 128 x 46.
void write_fingerprints(std::ostream& os, const std::vector<RealMatrix>& snapshots);
/// Values round-trip through float32.
std::vector<RealMatrix> read_fingerprints(std::istream& is);
void save_fingerprints(const std::string& path, const std::vector<RealMatrix>& snapshots);
std::vector<RealMatrix> load_fingerprints(const std::string& path);

/// One line per matrix row: snapshot,beam,v0,...,v{cols-1}.
void write_fingerprints_csv(std::ostream& os, const std::vector<RealMatrix>& snapshots);

}  // namespace mimoloc::io
