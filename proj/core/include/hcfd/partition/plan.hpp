#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hcfd/core/box.hpp"
#include "hcfd/core/state.hpp"

namespace hcfd::partition {

enum class BoundaryKind { Periodic, SupersonicInflow, ExtrapolationOutflow, SlipWall };

/// Faces in the order x-, x+, y-, y+, z-, z+.
enum class Face : int { XLo = 0, XHi, YLo, YHi, ZLo, ZHi };

inline constexpr int faceIndex(int axis, bool high) { return 2 * axis + (high ? 1 : 0); }

const char* boundaryName(BoundaryKind k);
BoundaryKind parseBoundary(const std::string& s);

class PlanError : public Error {
 public:
  using Error::Error;
};

/// A structured zone: global cell extents, boundary tags and physical box.
struct ZoneSpec {
  Index3 cells{1, 1, 1};
  std::array<BoundaryKind, 6> boundaries{BoundaryKind::Periodic, BoundaryKind::Periodic,
                                         BoundaryKind::Periodic, BoundaryKind::Periodic,
                                         BoundaryKind::Periodic, BoundaryKind::Periodic};
  /// Conserved state imposed in ghosts of SupersonicInflow faces.
  std::array<Vec5, 6> inflow{};
  std::array<double, 3> lower{0.0, 0.0, 0.0};
  std::array<double, 3> upper{1.0, 1.0, 1.0};

  std::int64_t totalCells() const {
    return static_cast<std::int64_t>(cells[0]) * cells[1] * cells[2];
  }
  IndexBox box() const { return {{0, 0, 0}, cells}; }
  std::array<double, 3> spacing() const;
  bool periodic(int axis) const {
    return boundaries[static_cast<std::size_t>(faceIndex(axis, false))] == BoundaryKind::Periodic;
  }
  /// Throws PlanError: extents < 1, physical box inverted, or a periodic face
  /// whose opposite face is not periodic.
  void validate() const;
};

struct Block {
  int id = 0;
  IndexBox box;     ///< global cell indices inside the zone
  Index3 gridPos{};  ///< position in the tensor-product block grid
};

/// Tensor-product decomposition: per axis, the cut points 0 = c0 < ... < cn = N.
struct BlockGrid {
  std::array<std::vector<int>, 3> cuts;

  Index3 dims() const {
    return {static_cast<int>(cuts[0].size()) - 1, static_cast<int>(cuts[1].size()) - 1,
            static_cast<int>(cuts[2].size()) - 1};
  }
  int count() const { const auto d = dims(); return d[0] * d[1] * d[2]; }
  int linear(const Index3& p) const { const auto d = dims(); return p[0] + d[0] * (p[1] + d[1] * p[2]); }
};

struct SplitResult {
  BlockGrid grid;
  std::vector<Block> blocks;  ///< ordered by BlockGrid::linear
};

/// Balanced axis-aligned split into exactly `targetBlocks` blocks. Sizes along an
/// axis differ by at most one cell, the larger ones first (100 into 3 gives
/// 34,33,33). Among factorizations the smallest largest-block, then the
/// smallest total block surface wins. Throws PlanError when target exceeds the
/// cell count or no factorization fits the extents.
SplitResult splitZone(const ZoneSpec& zone, int targetBlocks);

/// Fewest blocks such that no block has more than `maxBlockCells` cells.
SplitResult splitZoneMaxCells(const ZoneSpec& zone, std::int64_t maxBlockCells);

/// Explicit cut points per axis (each list starts at 0 and ends at the extent).
SplitResult splitZoneByCuts(const ZoneSpec& zone, const std::array<std::vector<int>, 3>& cuts);

enum class DeviceClass { Cpu, Coprocessor };
const char* deviceClassName(DeviceClass c);

/// Machine description shared by planning and the runtime.
struct NodeTopology {
  int nodes = 1;
  int cpuDevices = 1;          ///< per node
  int coprocessorDevices = 0;  ///< per node
  int workersPerDevice = 1;
  int rankSlotsPerNode = 0;    ///< 0: ceil(ranks / nodes)

  int slotsFor(int ranks) const;
  void validate() const;
};

/// One device of one rank. `share` is the fraction of a physical CPU socket a
/// CPU slot represents when several ranks share a node (1 otherwise).
struct DeviceSlot {
  DeviceClass deviceClass = DeviceClass::Cpu;
  int index = 0;  ///< within its class on this rank
  double share = 1.0;
};

/// Devices available to `rank`, CPUs first. Ranks sharing a node split its CPU
/// sockets (fractional shares when there are fewer sockets than ranks) and
/// take its coprocessors round-robin.
std::vector<DeviceSlot> rankDevices(const NodeTopology& topology, int ranks, int rank);

struct Group {
  int id = 0;
  int rank = 0;
  DeviceClass deviceClass = DeviceClass::Cpu;
  int deviceIndex = 0;
  std::vector<int> blocks;
};

/// Zone -> blocks -> groups -> (rank, device). Immutable once built.
struct PartitionPlan {
  static constexpr int kVersion = 1;

  ZoneSpec zone;
  BlockGrid grid;
  std::vector<Block> blocks;
  std::vector<Group> groups;
  std::vector<int> groupOfBlock;
  int ranks = 1;
  NodeTopology topology;
  double loadRatio = 1.0;  ///< coprocessor workload / CPU workload per device
  int haloWidth = 5;

  int rankOf(int block) const { return groups[static_cast<std::size_t>(groupOfBlock[static_cast<std::size_t>(block)])].rank; }
  const Group& groupOf(int block) const { return groups[static_cast<std::size_t>(groupOfBlock[static_cast<std::size_t>(block)])]; }
  std::vector<int> blocksOfRank(int rank) const;
  std::int64_t cellsOfRank(int rank) const;
  std::int64_t totalCells() const { return zone.totalCells(); }

  /// Blocks sharing a face, edge or corner with `block` (periodic images
  /// included, `block` itself excluded), sorted ascending.
  std::vector<int> neighbors(int block) const;
  bool hasCrossRankNeighbor(int block) const;

  /// Checks exact tiling, group membership and neighbor symmetry.
  void validate() const;
};

/// Per-device target cell counts for a rank holding `rankCells` cells.
std::vector<double> deviceShares(double rankCells, const std::vector<DeviceSlot>& devices,
                                 double loadRatio);

/// Assigns blocks to ranks (contiguous sub-boxes of the block grid when the
/// grid divides evenly, contiguous runs of the block order otherwise), then
/// packs each rank's blocks onto its devices largest-first against targets
/// proportional to 1 (CPU) and loadRatio (coprocessor). Blocks adjacent to
/// another rank go first among equal sizes; a device already holding an
/// adjacent block is preferred when the block still fits its target. Ties go
/// to the lower block/device index. Throws PlanError when a device is left
/// without blocks.
PartitionPlan regroupBlocks(const ZoneSpec& zone, const SplitResult& split, int ranks,
                            const NodeTopology& topology, double loadRatio, int haloWidth = 5);

/// Weighted undirected rank adjacency: weight = number of neighboring block pairs.
struct RankGraph {
  int ranks = 0;
  std::map<std::pair<int, int>, int> edges;  ///< key (a, b) with a < b

  void add(int a, int b, int w = 1);
  static RankGraph fromPlan(const PartitionPlan& plan);
};

struct RankPlacement {
  std::vector<int> nodeOfRank;
  int crossNodeEdges = 0;
  int roundRobinCrossNodeEdges = 0;
  std::string strategy;
};

int countCrossNodeEdges(const RankGraph& g, const std::vector<int>& nodeOfRank);

/// Places ranks on nodes with `slotsPerNode` ranks each, growing each node from
/// a chain end along the heaviest links. Never worse than round-robin: the
/// better of the greedy, consecutive and round-robin placements is returned.
RankPlacement mapRanksToNodes(const RankGraph& g, int nodes, int slotsPerNode);
RankPlacement mapRanksToNodes(const PartitionPlan& plan, const NodeTopology& topology);

struct DeviceLoad {
  int group = 0;
  int rank = 0;
  DeviceClass deviceClass = DeviceClass::Cpu;
  int deviceIndex = 0;
  std::int64_t cells = 0;
  double predictedTime = 0.0;  ///< cells / relative throughput
};

struct ImbalanceReport {
  std::vector<DeviceLoad> devices;
  double maxLoad = 0.0;
  double meanLoad = 0.0;
  double imbalance = 1.0;  ///< max / mean
};

/// Predicted load per device with CPU throughput 1 and the given coprocessor
/// throughput (defaults to the plan's load ratio, the balanced case).
ImbalanceReport imbalanceReport(const PartitionPlan& plan,
                                std::optional<double> coprocessorThroughput = std::nullopt);
ImbalanceReport imbalanceFromLoads(const std::vector<double>& loads);

/// Structured-text (JSON) plan file.
std::string planToText(const PartitionPlan& plan);
PartitionPlan planFromText(const std::string& text);
void writePlan(const PartitionPlan& plan, const std::string& path);
PartitionPlan readPlan(const std::string& path);

}  // namespace hcfd::partition
