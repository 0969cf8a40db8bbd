#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hcfd/core/field.hpp"
#include "hcfd/partition/plan.hpp"

namespace hcfd::harness {

/// Little-endian binary: header {u32 magic 'HCFD', u32 version, u32 blockCount},
/// then per block {i32 id, i32 nx, i32 ny, i32 nz} followed by the five
/// component arrays (rho, rho u, rho v, rho w, rho E), each nx*ny*nz f64 with x
/// fastest.
inline constexpr std::uint32_t kDumpMagic = 0x44464348u;
inline constexpr std::uint32_t kDumpVersion = 1;

struct DumpBlock {
  int id = 0;
  Index3 cells{0, 0, 0};
  std::array<std::vector<double>, kNumVars> data;

  double at(int c, int i, int j, int k) const {
    return data[static_cast<std::size_t>(c)][static_cast<std::size_t>(i + cells[0] * (j + cells[1] * k))];
  }
  friend bool operator==(const DumpBlock&, const DumpBlock&) = default;
};

struct FieldDump {
  std::vector<DumpBlock> blocks;

  friend bool operator==(const FieldDump&, const FieldDump&) = default;
};

/// One record per block (`perBlock`) or a single record with id 0 holding the
/// whole zone, which is the same for every partition of a case. `blocks` are
/// the interiors of all plan blocks, indexed by block id.
FieldDump makeDump(const std::vector<BlockField>& blocks, const partition::PartitionPlan& plan, bool perBlock);

std::vector<std::uint8_t> encodeDump(const FieldDump& d);
/// Throws Error on a bad magic, version or a truncated buffer.
FieldDump decodeDump(const std::vector<std::uint8_t>& bytes);
void writeDump(const FieldDump& d, const std::string& path);
FieldDump readDump(const std::string& path);

}  // namespace hcfd::harness
