#include "hcfd/partition/plan.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace hcfd::partition {

namespace {

constexpr const char* kBoundaryNames[] = {"periodic", "supersonic-inflow", "extrapolation-outflow",
                                          "slip-wall"};

std::vector<int> balancedCuts(int n, int parts) {
  std::vector<int> cuts(static_cast<std::size_t>(parts) + 1, 0);
  const int base = n / parts;
  const int extra = n % parts;
  for (int p = 0; p < parts; ++p) cuts[static_cast<std::size_t>(p) + 1] = cuts[static_cast<std::size_t>(p)] + base + (p < extra ? 1 : 0);
  return cuts;
}

SplitResult buildSplit(const std::array<std::vector<int>, 3>& cuts) {
  SplitResult out;
  out.grid.cuts = cuts;
  const Index3 d = out.grid.dims();
  out.blocks.reserve(static_cast<std::size_t>(out.grid.count()));
  for (int z = 0; z < d[2]; ++z)
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[0]; ++x) {
        Block b;
        b.gridPos = {x, y, z};
        b.id = out.grid.linear(b.gridPos);
        for (int a = 0; a < 3; ++a) {
          b.box.lo[a] = cuts[a][static_cast<std::size_t>(b.gridPos[a])];
          b.box.hi[a] = cuts[a][static_cast<std::size_t>(b.gridPos[a]) + 1];
        }
        out.blocks.push_back(b);
      }
  return out;
}

/// Area of the internal cut planes for a px*py*pz split of box n.
double cutArea(const Index3& n, const Index3& p) {
  return static_cast<double>(p[0] - 1) * n[1] * n[2] + static_cast<double>(p[1] - 1) * n[0] * n[2] +
         static_cast<double>(p[2] - 1) * n[0] * n[1];
}

std::int64_t ceilDiv(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

std::vector<Index3> factorTriples(int n) {
  std::vector<Index3> out;
  for (int a = 1; a <= n; ++a) {
    if (n % a) continue;
    const int rest = n / a;
    for (int b = 1; b <= rest; ++b) {
      if (rest % b) continue;
      out.push_back({a, b, rest / b});
    }
  }
  return out;
}

}  // namespace

const char* boundaryName(BoundaryKind k) { return kBoundaryNames[static_cast<int>(k)]; }

BoundaryKind parseBoundary(const std::string& s) {
  for (int i = 0; i < 4; ++i)
    if (s == kBoundaryNames[i]) return static_cast<BoundaryKind>(i);
  throw PlanError("unknown boundary kind '" + s + "'");
}

const char* deviceClassName(DeviceClass c) { return c == DeviceClass::Cpu ? "cpu" : "coprocessor"; }

std::array<double, 3> ZoneSpec::spacing() const {
  return {(upper[0] - lower[0]) / cells[0], (upper[1] - lower[1]) / cells[1],
          (upper[2] - lower[2]) / cells[2]};
}

void ZoneSpec::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (cells[a] < 1) throw PlanError("zone extent along " + std::string(axisName(kAxes[a])) + " must be >= 1");
    if (!(upper[a] > lower[a])) throw PlanError("zone physical extent must be positive");
    const bool lo = boundaries[static_cast<std::size_t>(faceIndex(a, false))] == BoundaryKind::Periodic;
    const bool hi = boundaries[static_cast<std::size_t>(faceIndex(a, true))] == BoundaryKind::Periodic;
    if (lo != hi)
      throw PlanError("periodic face along " + std::string(axisName(kAxes[a])) +
                      " has a non-periodic opposite face");
  }
}

SplitResult splitZone(const ZoneSpec& zone, int targetBlocks) {
  zone.validate();
  if (targetBlocks < 1) throw PlanError("target block count must be >= 1");
  if (targetBlocks > zone.totalCells())
    throw PlanError("target of " + std::to_string(targetBlocks) + " blocks exceeds the " +
                    std::to_string(zone.totalCells()) + " cells of the zone");

  bool found = false;
  Index3 best{};
  std::int64_t bestMax = 0;
  double bestArea = 0.0;
  for (const Index3& p : factorTriples(targetBlocks)) {
    if (p[0] > zone.cells[0] || p[1] > zone.cells[1] || p[2] > zone.cells[2]) continue;
    const std::int64_t maxCells =
        ceilDiv(zone.cells[0], p[0]) * ceilDiv(zone.cells[1], p[1]) * ceilDiv(zone.cells[2], p[2]);
    const double area = cutArea(zone.cells, p);
    if (!found || maxCells < bestMax || (maxCells == bestMax && area < bestArea)) {
      found = true;
      best = p;
      bestMax = maxCells;
      bestArea = area;
    }
  }
  if (!found)
    throw PlanError("no axis-aligned split of " + std::to_string(zone.cells[0]) + "x" +
                    std::to_string(zone.cells[1]) + "x" + std::to_string(zone.cells[2]) + " into " +
                    std::to_string(targetBlocks) + " blocks");
  return buildSplit({balancedCuts(zone.cells[0], best[0]), balancedCuts(zone.cells[1], best[1]),
                     balancedCuts(zone.cells[2], best[2])});
}

SplitResult splitZoneMaxCells(const ZoneSpec& zone, std::int64_t maxBlockCells) {
  zone.validate();
  if (maxBlockCells < 1) throw PlanError("maxBlockCells must be >= 1");
  const std::int64_t total = zone.totalCells();
  for (std::int64_t t = ceilDiv(total, maxBlockCells); t <= total; ++t) {
    if (t > std::numeric_limits<int>::max()) break;
    try {
      SplitResult s = splitZone(zone, static_cast<int>(t));
      const bool ok = std::all_of(s.blocks.begin(), s.blocks.end(),
                                  [&](const Block& b) { return b.box.cells() <= maxBlockCells; });
      if (ok) return s;
    } catch (const PlanError&) {
    }
  }
  throw PlanError("cannot split the zone into blocks of at most " + std::to_string(maxBlockCells) + " cells");
}

SplitResult splitZoneByCuts(const ZoneSpec& zone, const std::array<std::vector<int>, 3>& cuts) {
  zone.validate();
  for (int a = 0; a < 3; ++a) {
    const auto& c = cuts[a];
    if (c.size() < 2 || c.front() != 0 || c.back() != zone.cells[a])
      throw PlanError("cuts along " + std::string(axisName(kAxes[a])) + " must start at 0 and end at the extent");
    for (std::size_t i = 1; i < c.size(); ++i)
      if (c[i] <= c[i - 1]) throw PlanError("cuts must be strictly increasing");
  }
  return buildSplit(cuts);
}

int NodeTopology::slotsFor(int ranks) const {
  if (rankSlotsPerNode > 0) return rankSlotsPerNode;
  return static_cast<int>(ceilDiv(ranks, std::max(1, nodes)));
}

void NodeTopology::validate() const {
  if (nodes < 1) throw PlanError("topology needs at least one node");
  if (cpuDevices < 0 || coprocessorDevices < 0) throw PlanError("device counts must be >= 0");
  if (cpuDevices + coprocessorDevices < 1) throw PlanError("topology needs at least one device");
  if (workersPerDevice < 1) throw PlanError("workersPerDevice must be >= 1");
  if (rankSlotsPerNode < 0) throw PlanError("rankSlotsPerNode must be >= 0");
}

std::vector<DeviceSlot> rankDevices(const NodeTopology& topology, int ranks, int rank) {
  topology.validate();
  const int perNode = std::max(1, std::min(topology.slotsFor(ranks), ranks));
  const int local = rank % perNode;
  std::vector<DeviceSlot> out;
  if (topology.cpuDevices > 0) {
    if (perNode >= topology.cpuDevices) {
      out.push_back({DeviceClass::Cpu, 0, static_cast<double>(topology.cpuDevices) / perNode});
    } else {
      const int count = topology.cpuDevices / perNode + (local < topology.cpuDevices % perNode ? 1 : 0);
      for (int c = 0; c < count; ++c) out.push_back({DeviceClass::Cpu, c, 1.0});
    }
  }
  int cop = 0;
  for (int c = 0; c < topology.coprocessorDevices; ++c)
    if (c % perNode == local) out.push_back({DeviceClass::Coprocessor, cop++, 1.0});
  return out;
}

std::vector<double> deviceShares(double rankCells, const std::vector<DeviceSlot>& devices,
                                 double loadRatio) {
  double sum = 0.0;
  std::vector<double> w;
  for (const auto& d : devices) {
    w.push_back(d.deviceClass == DeviceClass::Cpu ? d.share : loadRatio);
    sum += w.back();
  }
  for (auto& x : w) x = sum > 0.0 ? rankCells * x / sum : 0.0;
  return w;
}

std::vector<int> PartitionPlan::blocksOfRank(int rank) const {
  std::vector<int> out;
  for (const auto& g : groups)
    if (g.rank == rank) out.insert(out.end(), g.blocks.begin(), g.blocks.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::int64_t PartitionPlan::cellsOfRank(int rank) const {
  std::int64_t s = 0;
  for (int b : blocksOfRank(rank)) s += blocks[static_cast<std::size_t>(b)].box.cells();
  return s;
}

namespace {

std::vector<int> gridNeighbors(const ZoneSpec& zone, const BlockGrid& grid, int block) {
  const Index3 d = grid.dims();
  const Index3 p{block % d[0], (block / d[0]) % d[1], block / (d[0] * d[1])};
  std::set<int> out;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0 && dz == 0) continue;
        Index3 q{p[0] + dx, p[1] + dy, p[2] + dz};
        bool ok = true;
        for (int a = 0; a < 3; ++a) {
          if (q[a] >= 0 && q[a] < d[a]) continue;
          if (!zone.periodic(a)) { ok = false; break; }
          q[a] = (q[a] + d[a]) % d[a];
        }
        if (!ok) continue;
        const int n = grid.linear(q);
        if (n != block) out.insert(n);
      }
  return {out.begin(), out.end()};
}

}  // namespace

std::vector<int> PartitionPlan::neighbors(int block) const { return gridNeighbors(zone, grid, block); }

bool PartitionPlan::hasCrossRankNeighbor(int block) const {
  const int r = rankOf(block);
  for (int n : neighbors(block))
    if (rankOf(n) != r) return true;
  return false;
}

void PartitionPlan::validate() const {
  zone.validate();
  for (int a = 0; a < 3; ++a) {
    const auto& c = grid.cuts[a];
    if (c.size() < 2 || c.front() != 0 || c.back() != zone.cells[a])
      throw PlanError("plan cuts do not span the zone");
    for (std::size_t i = 1; i < c.size(); ++i)
      if (c[i] <= c[i - 1]) throw PlanError("plan cuts are not increasing");
  }
  if (static_cast<int>(blocks.size()) != grid.count()) throw PlanError("block count does not match the block grid");
  std::int64_t cells = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Block& b = blocks[i];
    if (b.id != static_cast<int>(i)) throw PlanError("block ids must be dense and ordered");
    if (grid.linear(b.gridPos) != b.id) throw PlanError("block " + std::to_string(b.id) + " grid position mismatch");
    for (int a = 0; a < 3; ++a) {
      const auto k = static_cast<std::size_t>(b.gridPos[a]);
      if (b.box.lo[a] != grid.cuts[a][k] || b.box.hi[a] != grid.cuts[a][k + 1])
        throw PlanError("block " + std::to_string(b.id) + " does not match the cut grid");
    }
    cells += b.box.cells();
  }
  if (cells != zone.totalCells()) throw PlanError("blocks do not tile the zone");

  std::vector<int> seen(blocks.size(), -1);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].id != static_cast<int>(g)) throw PlanError("group ids must be dense and ordered");
    if (groups[g].rank < 0 || groups[g].rank >= ranks) throw PlanError("group rank out of range");
    for (int b : groups[g].blocks) {
      if (b < 0 || b >= static_cast<int>(blocks.size())) throw PlanError("group references unknown block");
      if (seen[static_cast<std::size_t>(b)] >= 0)
        throw PlanError("block " + std::to_string(b) + " belongs to two groups");
      seen[static_cast<std::size_t>(b)] = static_cast<int>(g);
    }
  }
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (seen[b] < 0) throw PlanError("block " + std::to_string(b) + " has no group");
    if (groupOfBlock.size() != blocks.size() || groupOfBlock[b] != seen[b])
      throw PlanError("group lookup table is inconsistent");
  }
  for (std::size_t b = 0; b < blocks.size(); ++b)
    for (int n : neighbors(static_cast<int>(b))) {
      const auto back = neighbors(n);
      if (!std::binary_search(back.begin(), back.end(), static_cast<int>(b)))
        throw PlanError("asymmetric connectivity between blocks " + std::to_string(b) + " and " + std::to_string(n));
    }
}

namespace {

/// Rank of every block: sub-boxes of the block grid when possible.
std::vector<int> assignRanks(const ZoneSpec& zone, const SplitResult& split, int ranks) {
  const Index3 d = split.grid.dims();
  const auto nb = split.blocks.size();
  std::vector<int> rankOf(nb, 0);

  bool found = false;
  Index3 best{};
  double bestArea = 0.0;
  for (const Index3& r : factorTriples(ranks)) {
    if (d[0] % r[0] || d[1] % r[1] || d[2] % r[2]) continue;
    const double area = cutArea(zone.cells, r);
    if (!found || area < bestArea) {
      found = true;
      best = r;
      bestArea = area;
    }
  }
  if (found) {
    for (const Block& b : split.blocks) {
      Index3 rp;
      for (int a = 0; a < 3; ++a) rp[a] = b.gridPos[a] / (d[a] / best[a]);
      rankOf[static_cast<std::size_t>(b.id)] = rp[0] + best[0] * (rp[1] + best[1] * rp[2]);
    }
    return rankOf;
  }

  // Contiguous runs in block order, balanced by cells.
  const double total = static_cast<double>(zone.totalCells());
  std::size_t start = 0;
  double cum = 0.0;
  for (int r = 0; r < ranks; ++r) {
    const std::size_t remainingRanks = static_cast<std::size_t>(ranks - r - 1);
    const double goal = total * (r + 1) / ranks;
    std::size_t end = start + 1;
    double endCum = cum + static_cast<double>(split.blocks[start].box.cells());
    while (end + remainingRanks < nb) {
      const double next = endCum + static_cast<double>(split.blocks[end].box.cells());
      if (std::abs(next - goal) < std::abs(endCum - goal)) {
        endCum = next;
        ++end;
      } else {
        break;
      }
    }
    if (r == ranks - 1) end = nb;
    for (std::size_t b = start; b < end; ++b) rankOf[b] = r;
    start = end;
    cum = endCum;
  }
  return rankOf;
}

}  // namespace

PartitionPlan regroupBlocks(const ZoneSpec& zone, const SplitResult& split, int ranks,
                            const NodeTopology& topology, double loadRatio, int haloWidth) {
  zone.validate();
  topology.validate();
  if (ranks < 1) throw PlanError("ranks must be >= 1");
  if (!(loadRatio > 0.0) || !std::isfinite(loadRatio)) throw PlanError("load ratio must be positive");
  if (static_cast<int>(split.blocks.size()) < ranks)
    throw PlanError(std::to_string(split.blocks.size()) + " blocks cannot populate " + std::to_string(ranks) +
                    " ranks; split the zone finer");

  PartitionPlan plan;
  plan.zone = zone;
  plan.grid = split.grid;
  plan.blocks = split.blocks;
  plan.ranks = ranks;
  plan.topology = topology;
  plan.loadRatio = loadRatio;
  plan.haloWidth = haloWidth;

  const std::vector<int> rankOf = assignRanks(zone, split, ranks);
  std::vector<std::vector<int>> neighborList(plan.blocks.size());
  for (std::size_t b = 0; b < plan.blocks.size(); ++b)
    neighborList[b] = gridNeighbors(zone, split.grid, static_cast<int>(b));

  plan.groupOfBlock.assign(plan.blocks.size(), -1);
  for (int r = 0; r < ranks; ++r) {
    std::vector<int> mine;
    std::int64_t rankCells = 0;
    for (std::size_t b = 0; b < rankOf.size(); ++b)
      if (rankOf[b] == r) {
        mine.push_back(static_cast<int>(b));
        rankCells += plan.blocks[b].box.cells();
      }
    const auto devices = rankDevices(topology, ranks, r);
    if (static_cast<int>(mine.size()) < static_cast<int>(devices.size()))
      throw PlanError("rank " + std::to_string(r) + " has " + std::to_string(mine.size()) + " blocks for " +
                      std::to_string(devices.size()) + " devices; split the zone into at least " +
                      std::to_string(devices.size() * static_cast<std::size_t>(ranks)) + " blocks");

    auto crossRank = [&](int b) {
      for (int n : neighborList[static_cast<std::size_t>(b)])
        if (rankOf[static_cast<std::size_t>(n)] != r) return true;
      return false;
    };
    std::sort(mine.begin(), mine.end(), [&](int a, int b) {
      const auto ca = plan.blocks[static_cast<std::size_t>(a)].box.cells();
      const auto cb = plan.blocks[static_cast<std::size_t>(b)].box.cells();
      if (ca != cb) return ca > cb;
      const bool xa = crossRank(a), xb = crossRank(b);
      if (xa != xb) return xa;
      return a < b;
    });

    const auto target = deviceShares(static_cast<double>(rankCells), devices, loadRatio);
    std::vector<double> assigned(devices.size(), 0.0);
    std::vector<std::vector<int>> held(devices.size());
    std::vector<int> deviceOf(plan.blocks.size(), -1);
    for (int b : mine) {
      const double cells = static_cast<double>(plan.blocks[static_cast<std::size_t>(b)].box.cells());
      int pick = -1;
      double pickDeficit = 0.0;
      // Adjacent device that still has room for the whole block.
      for (std::size_t d = 0; d < devices.size(); ++d) {
        const double deficit = target[d] - assigned[d];
        if (deficit < cells * (1.0 - 1e-12)) continue;
        bool adjacent = false;
        for (int n : neighborList[static_cast<std::size_t>(b)])
          if (deviceOf[static_cast<std::size_t>(n)] == static_cast<int>(d)) adjacent = true;
        if (adjacent && (pick < 0 || deficit > pickDeficit)) {
          pick = static_cast<int>(d);
          pickDeficit = deficit;
        }
      }
      if (pick < 0) {
        for (std::size_t d = 0; d < devices.size(); ++d) {
          const double deficit = target[d] - assigned[d];
          if (pick < 0 || deficit > pickDeficit) {
            pick = static_cast<int>(d);
            pickDeficit = deficit;
          }
        }
      }
      assigned[static_cast<std::size_t>(pick)] += cells;
      held[static_cast<std::size_t>(pick)].push_back(b);
      deviceOf[static_cast<std::size_t>(b)] = pick;
    }

    for (std::size_t d = 0; d < devices.size(); ++d) {
      if (held[d].empty())
        throw PlanError("rank " + std::to_string(r) + " " + deviceClassName(devices[d].deviceClass) + " device " +
                        std::to_string(devices[d].index) + " received no blocks; split the zone finer");
      Group g;
      g.id = static_cast<int>(plan.groups.size());
      g.rank = r;
      g.deviceClass = devices[d].deviceClass;
      g.deviceIndex = devices[d].index;
      g.blocks = held[d];
      std::sort(g.blocks.begin(), g.blocks.end());
      for (int b : g.blocks) plan.groupOfBlock[static_cast<std::size_t>(b)] = g.id;
      plan.groups.push_back(std::move(g));
    }
  }
  plan.validate();
  return plan;
}

void RankGraph::add(int a, int b, int w) {
  if (a == b) return;
  edges[{std::min(a, b), std::max(a, b)}] += w;
}

RankGraph RankGraph::fromPlan(const PartitionPlan& plan) {
  RankGraph g;
  g.ranks = plan.ranks;
  for (std::size_t b = 0; b < plan.blocks.size(); ++b)
    for (int n : plan.neighbors(static_cast<int>(b)))
      if (n > static_cast<int>(b)) g.add(plan.rankOf(static_cast<int>(b)), plan.rankOf(n));
  return g;
}

int countCrossNodeEdges(const RankGraph& g, const std::vector<int>& nodeOfRank) {
  int n = 0;
  for (const auto& [key, w] : g.edges)
    if (nodeOfRank[static_cast<std::size_t>(key.first)] != nodeOfRank[static_cast<std::size_t>(key.second)]) ++n;
  return n;
}

RankPlacement mapRanksToNodes(const RankGraph& g, int nodes, int slotsPerNode) {
  if (nodes < 1 || slotsPerNode < 1) throw PlanError("node count and slots per node must be >= 1");
  if (g.ranks > nodes * slotsPerNode)
    throw PlanError(std::to_string(g.ranks) + " ranks exceed the capacity of " + std::to_string(nodes) +
                    " nodes with " + std::to_string(slotsPerNode) + " slots");
  const auto R = static_cast<std::size_t>(g.ranks);
  std::vector<std::vector<std::pair<int, int>>> adj(R);
  for (const auto& [key, w] : g.edges) {
    adj[static_cast<std::size_t>(key.first)].push_back({key.second, w});
    adj[static_cast<std::size_t>(key.second)].push_back({key.first, w});
  }

  std::vector<int> greedy(R, -1);
  std::size_t placed = 0;
  for (int node = 0; node < nodes && placed < R; ++node) {
    int fill = 0;
    std::vector<int> link(R, 0);
    while (fill < slotsPerNode && placed < R) {
      int pick = -1;
      int best = 0;
      for (std::size_t r = 0; r < R; ++r)
        if (greedy[r] < 0 && link[r] > best) { best = link[r]; pick = static_cast<int>(r); }
      if (pick < 0) {
        // Seed: the unplaced rank with the fewest unplaced neighbors (a chain end).
        int bestDeg = std::numeric_limits<int>::max();
        for (std::size_t r = 0; r < R; ++r) {
          if (greedy[r] >= 0) continue;
          int deg = 0;
          for (auto [n, w] : adj[r])
            if (greedy[static_cast<std::size_t>(n)] < 0) ++deg;
          if (deg < bestDeg) { bestDeg = deg; pick = static_cast<int>(r); }
        }
      }
      greedy[static_cast<std::size_t>(pick)] = node;
      ++placed;
      ++fill;
      for (auto [n, w] : adj[static_cast<std::size_t>(pick)]) link[static_cast<std::size_t>(n)] += w;
    }
  }

  std::vector<int> consecutive(R), roundRobin(R);
  for (std::size_t r = 0; r < R; ++r) {
    consecutive[r] = static_cast<int>(r) / slotsPerNode;
    roundRobin[r] = static_cast<int>(r) % nodes;
  }

  RankPlacement out;
  out.roundRobinCrossNodeEdges = countCrossNodeEdges(g, roundRobin);
  const int eg = countCrossNodeEdges(g, greedy);
  const int ec = countCrossNodeEdges(g, consecutive);
  out.nodeOfRank = greedy;
  out.crossNodeEdges = eg;
  out.strategy = "greedy";
  if (ec < out.crossNodeEdges) { out.nodeOfRank = consecutive; out.crossNodeEdges = ec; out.strategy = "consecutive"; }
  if (out.roundRobinCrossNodeEdges < out.crossNodeEdges) {
    out.nodeOfRank = roundRobin;
    out.crossNodeEdges = out.roundRobinCrossNodeEdges;
    out.strategy = "round-robin";
  }
  return out;
}

RankPlacement mapRanksToNodes(const PartitionPlan& plan, const NodeTopology& topology) {
  topology.validate();
  return mapRanksToNodes(RankGraph::fromPlan(plan), topology.nodes, topology.slotsFor(plan.ranks));
}

ImbalanceReport imbalanceFromLoads(const std::vector<double>& loads) {
  ImbalanceReport rep;
  if (loads.empty()) return rep;
  rep.maxLoad = *std::max_element(loads.begin(), loads.end());
  rep.meanLoad = std::accumulate(loads.begin(), loads.end(), 0.0) / static_cast<double>(loads.size());
  rep.imbalance = rep.meanLoad > 0.0 ? rep.maxLoad / rep.meanLoad : 1.0;
  return rep;
}

ImbalanceReport imbalanceReport(const PartitionPlan& plan, std::optional<double> coprocessorThroughput) {
  const double cop = coprocessorThroughput.value_or(plan.loadRatio);
  std::vector<DeviceLoad> devs;
  std::vector<double> loads;
  for (const auto& g : plan.groups) {
    DeviceLoad d;
    d.group = g.id;
    d.rank = g.rank;
    d.deviceClass = g.deviceClass;
    d.deviceIndex = g.deviceIndex;
    for (int b : g.blocks) d.cells += plan.blocks[static_cast<std::size_t>(b)].box.cells();
    double throughput = cop;
    if (g.deviceClass == DeviceClass::Cpu) {
      throughput = 1.0;
      for (const auto& s : rankDevices(plan.topology, plan.ranks, g.rank))
        if (s.deviceClass == DeviceClass::Cpu && s.index == g.deviceIndex) throughput = s.share;
    }
    d.predictedTime = static_cast<double>(d.cells) / throughput;
    loads.push_back(d.predictedTime);
    devs.push_back(d);
  }
  ImbalanceReport rep = imbalanceFromLoads(loads);
  rep.devices = std::move(devs);
  return rep;
}

namespace {

using nlohmann::json;

json boxJson(const Index3& a) { return json::array({a[0], a[1], a[2]}); }
Index3 boxIndex(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>()}; }

}  // namespace

std::string planToText(const PartitionPlan& plan) {
  json j;
  j["format"] = "hcfd-plan";
  j["version"] = PartitionPlan::kVersion;
  json z;
  z["cells"] = boxJson(plan.zone.cells);
  z["lower"] = plan.zone.lower;
  z["upper"] = plan.zone.upper;
  json faces = json::array();
  for (int f = 0; f < 6; ++f) {
    json face;
    face["boundary"] = boundaryName(plan.zone.boundaries[static_cast<std::size_t>(f)]);
    if (plan.zone.boundaries[static_cast<std::size_t>(f)] == BoundaryKind::SupersonicInflow)
      face["inflow"] = plan.zone.inflow[static_cast<std::size_t>(f)].v;
    faces.push_back(face);
  }
  z["faces"] = faces;
  j["zone"] = z;
  j["haloWidth"] = plan.haloWidth;
  j["loadRatio"] = plan.loadRatio;
  j["ranks"] = plan.ranks;
  j["topology"] = {{"nodes", plan.topology.nodes},
                   {"cpuDevices", plan.topology.cpuDevices},
                   {"coprocessorDevices", plan.topology.coprocessorDevices},
                   {"workersPerDevice", plan.topology.workersPerDevice},
                   {"rankSlotsPerNode", plan.topology.rankSlotsPerNode}};
  j["cuts"] = {plan.grid.cuts[0], plan.grid.cuts[1], plan.grid.cuts[2]};
  json blocks = json::array();
  for (const auto& b : plan.blocks)
    blocks.push_back({{"id", b.id}, {"lo", boxJson(b.box.lo)}, {"hi", boxJson(b.box.hi)}, {"cells", b.box.cells()}});
  j["blocks"] = blocks;
  json groups = json::array();
  for (const auto& g : plan.groups)
    groups.push_back({{"id", g.id},
                      {"rank", g.rank},
                      {"device", deviceClassName(g.deviceClass)},
                      {"deviceIndex", g.deviceIndex},
                      {"blocks", g.blocks}});
  j["groups"] = groups;
  return j.dump(2) + "\n";
}

PartitionPlan planFromText(const std::string& text) {
  PartitionPlan plan;
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != "hcfd-plan") throw PlanError("not a plan file");
    if (j.at("version").get<int>() != PartitionPlan::kVersion)
      throw PlanError("unsupported plan version " + std::to_string(j.at("version").get<int>()));
    const json& z = j.at("zone");
    plan.zone.cells = boxIndex(z.at("cells"));
    plan.zone.lower = z.at("lower").get<std::array<double, 3>>();
    plan.zone.upper = z.at("upper").get<std::array<double, 3>>();
    for (std::size_t f = 0; f < 6; ++f) {
      const json& face = z.at("faces").at(f);
      plan.zone.boundaries[f] = parseBoundary(face.at("boundary").get<std::string>());
      if (face.contains("inflow")) plan.zone.inflow[f].v = face.at("inflow").get<std::array<double, 5>>();
    }
    plan.haloWidth = j.at("haloWidth").get<int>();
    plan.loadRatio = j.at("loadRatio").get<double>();
    plan.ranks = j.at("ranks").get<int>();
    const json& t = j.at("topology");
    plan.topology.nodes = t.at("nodes").get<int>();
    plan.topology.cpuDevices = t.at("cpuDevices").get<int>();
    plan.topology.coprocessorDevices = t.at("coprocessorDevices").get<int>();
    plan.topology.workersPerDevice = t.at("workersPerDevice").get<int>();
    plan.topology.rankSlotsPerNode = t.value("rankSlotsPerNode", 0);
    std::array<std::vector<int>, 3> cuts;
    for (std::size_t a = 0; a < 3; ++a) cuts[a] = j.at("cuts").at(a).get<std::vector<int>>();
    SplitResult s = buildSplit(cuts);
    plan.grid = s.grid;
    plan.blocks = s.blocks;
    const json& blocks = j.at("blocks");
    if (blocks.size() != plan.blocks.size()) throw PlanError("block list does not match the cuts");
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      IndexBox box{boxIndex(blocks[b].at("lo")), boxIndex(blocks[b].at("hi"))};
      if (!(box == plan.blocks[b].box) || blocks[b].at("id").get<int>() != static_cast<int>(b))
        throw PlanError("block " + std::to_string(b) + " does not match the cuts");
    }
    plan.groupOfBlock.assign(plan.blocks.size(), -1);
    for (const json& gj : j.at("groups")) {
      Group g;
      g.id = gj.at("id").get<int>();
      g.rank = gj.at("rank").get<int>();
      const auto dev = gj.at("device").get<std::string>();
      if (dev != "cpu" && dev != "coprocessor") throw PlanError("unknown device class '" + dev + "'");
      g.deviceClass = dev == "cpu" ? DeviceClass::Cpu : DeviceClass::Coprocessor;
      g.deviceIndex = gj.at("deviceIndex").get<int>();
      g.blocks = gj.at("blocks").get<std::vector<int>>();
      for (int b : g.blocks)
        if (b >= 0 && b < static_cast<int>(plan.blocks.size())) plan.groupOfBlock[static_cast<std::size_t>(b)] = g.id;
      plan.groups.push_back(std::move(g));
    }
  } catch (const nlohmann::json::exception& e) {
    throw PlanError(std::string("malformed plan file: ") + e.what());
  }
  plan.validate();
  return plan;
}

void writePlan(const PartitionPlan& plan, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw PlanError("cannot write plan file " + path);
  out << planToText(plan);
  if (!out) throw PlanError("cannot write plan file " + path);
}

PartitionPlan readPlan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PlanError("cannot read plan file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return planFromText(ss.str());
}

}  // namespace hcfd::partition
