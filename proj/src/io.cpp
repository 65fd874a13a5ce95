// SPDX-License-Identifier: Apache-2.0
#include "mimoloc/io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

#include "binio.hpp"
#include "mimoloc/types.hpp"

namespace mimoloc::io {

void write_fingerprints(std::ostream& os, const std::vector<RealMatrix>& snapshots) {
  for (const auto& m : snapshots)
    expects(m.rows() == kBeams && m.cols() == kDelayBins,
            "write_fingerprints: snapshots must be 128 x 46");
  binio::write_magic(os, "BDFP");
  binio::write_u32(os, static_cast<std::uint32_t>(snapshots.size()));
  for (const auto& m : snapshots)
    for (double v : m.values()) binio::write_f32(os, static_cast<float>(v));
}

std::vector<RealMatrix> read_fingerprints(std::istream& is) {
  binio::expect_magic(is, "BDFP", "fingerprint");
  const auto count = binio::read_u32(is, "count");
  std::vector<RealMatrix> out;
  for (std::uint32_t s = 0; s < count; ++s) {
    RealMatrix m(kBeams, kDelayBins);
    for (double& v : m.flat()) v = binio::read_f32(is, "fingerprint values");
    out.push_back(std::move(m));
  }
  return out;
}

void save_fingerprints(const std::string& path, const std::vector<RealMatrix>& snapshots) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_fingerprints(os, snapshots);
  os.flush();
  if (!os) throw IoError("write to '" + path + "' failed");
}

std::vector<RealMatrix> load_fingerprints(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  return read_fingerprints(is);
}

void write_fingerprints_csv(std::ostream& os, const std::vector<RealMatrix>& snapshots) {
  char buf[32];
  for (std::size_t s = 0; s < snapshots.size(); ++s) {
    const auto& m = snapshots[s];
    for (std::size_t r = 0; r < m.rows(); ++r) {
      os << s << ',' << r;
      for (double v : m.row(r)) {
        std::snprintf(buf, sizeof buf, ",%.9g", v);
        os << buf;
      }
      os << '\n';
    }
  }
}

}  // namespace mimoloc::io
