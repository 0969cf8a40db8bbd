#include "hcfd/exchange/halo.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <tuple>

namespace hcfd::exchange {

using partition::BoundaryKind;
using partition::PartitionPlan;

namespace {

struct Piece {
  int lo = 0, hi = 0;  // local destination range
  bool fixed = false;
  int face = -1;       // face of a fixed state
  int blockIdx = 0;    // source interval along the axis
  int start = 0;       // local source index at lo
  int step = 1;
  bool mirrored = false;
};

int intervalOf(const std::vector<int>& cuts, int g) {
  auto it = std::upper_bound(cuts.begin(), cuts.end(), g);
  return static_cast<int>(it - cuts.begin()) - 1;
}

/// Source pieces for destination local range [l0, l1) of a block along axis a.
std::vector<Piece> axisPieces(const PartitionPlan& plan, int blockLo, int a, int l0, int l1, int dstBlock) {
  const int n = plan.zone.cells[a];
  const auto& cuts = plan.grid.cuts[a];
  std::vector<Piece> out;
  for (int l = l0; l < l1; ++l) {
    const int g = blockLo + l;
    Piece c;
    c.lo = l;
    c.hi = l + 1;
    int src = g;
    if (g < 0 || g >= n) {
      const bool high = g >= n;
      const int face = partition::faceIndex(a, high);
      switch (plan.zone.boundaries[static_cast<std::size_t>(face)]) {
        case BoundaryKind::Periodic:
          src = ((g % n) + n) % n;
          break;
        case BoundaryKind::SlipWall:
          src = high ? 2 * n - 1 - g : -1 - g;
          c.step = -1;
          c.mirrored = true;
          if (src < 0 || src >= n)
            throw HaloError("block " + std::to_string(dstBlock) + ": zone is thinner than the halo width next to a wall");
          break;
        case BoundaryKind::ExtrapolationOutflow:
          src = high ? n - 1 : 0;
          c.step = 0;
          break;
        case BoundaryKind::SupersonicInflow:
          c.fixed = true;
          c.face = face;
          break;
      }
    }
    if (!c.fixed) {
      c.blockIdx = intervalOf(cuts, src);
      c.start = src - cuts[static_cast<std::size_t>(c.blockIdx)];
    }
    if (!out.empty()) {
      Piece& p = out.back();
      const bool joins =
          p.fixed == c.fixed &&
          (c.fixed ? p.face == c.face
                   : (p.blockIdx == c.blockIdx && p.step == c.step && p.mirrored == c.mirrored &&
                      c.start == p.start + p.step * (p.hi - p.lo)));
      if (joins) {
        p.hi = c.hi;
        continue;
      }
    }
    out.push_back(c);
  }
  return out;
}

std::vector<int> nodeIntervals(const PartitionPlan& plan, int a, int x) {
  const auto& cuts = plan.grid.cuts[a];
  std::vector<int> out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    if (cuts[i] <= x && x <= cuts[i + 1]) out.push_back(static_cast<int>(i));
  if (plan.zone.periodic(a) && x == 0) out.push_back(static_cast<int>(cuts.size()) - 2);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<SingularPoint> findSingularPoints(const PartitionPlan& plan) {
  std::set<Index3> seen;
  std::vector<SingularPoint> out;
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b) {
      const int c = 3 - a - b;
      const int nc = plan.zone.cells[c];
      const int lastC = plan.zone.periodic(c) ? nc - 1 : nc;
      for (int xa : plan.grid.cuts[a]) {
        if (plan.zone.periodic(a) && xa == plan.zone.cells[a]) continue;
        for (int xb : plan.grid.cuts[b]) {
          if (plan.zone.periodic(b) && xb == plan.zone.cells[b]) continue;
          for (int xc = 0; xc <= lastC; ++xc) {
            Index3 node{};
            node[a] = xa;
            node[b] = xb;
            node[c] = xc;
            if (seen.count(node)) continue;
            std::array<std::vector<int>, 3> per;
            for (int d = 0; d < 3; ++d) per[d] = nodeIntervals(plan, d, node[d]);
            std::set<int> sharers;
            for (int i : per[0])
              for (int j : per[1])
                for (int k : per[2]) sharers.insert(plan.grid.linear({i, j, k}));
            if (sharers.size() < 3) continue;
            seen.insert(node);
            SingularPoint p;
            p.node = node;
            p.sharers.assign(sharers.begin(), sharers.end());
            p.owner = p.sharers.front();
            out.push_back(std::move(p));
          }
        }
      }
    }
  std::sort(out.begin(), out.end(), [](const SingularPoint& x, const SingularPoint& y) {
    return std::tie(x.node[2], x.node[1], x.node[0]) < std::tie(y.node[2], y.node[1], y.node[0]);
  });
  return out;
}

}  // namespace

HaloPlan buildHaloPlan(const PartitionPlan& plan) {
  HaloPlan halo;
  halo.haloWidth = plan.haloWidth;
  halo.ranks = plan.ranks;
  const int H = plan.haloWidth;
  for (std::size_t b = 0; b < plan.blocks.size(); ++b) halo.rankOfBlock.push_back(plan.rankOf(static_cast<int>(b)));

  for (const auto& blk : plan.blocks) {
    const auto neighbors = plan.neighbors(blk.id);
    const Index3 n = blk.box.extents();
    std::array<std::array<std::vector<Piece>, 3>, 3> pieces;  // [axis][dir+1]
    for (int a = 0; a < 3; ++a) {
      pieces[a][0] = axisPieces(plan, blk.box.lo[a], a, -H, 0, blk.id);
      pieces[a][1] = axisPieces(plan, blk.box.lo[a], a, 0, n[a], blk.id);
      pieces[a][2] = axisPieces(plan, blk.box.lo[a], a, n[a], n[a] + H, blk.id);
    }
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0 && dz == 0) continue;
          const Index3 dir{dx, dy, dz};
          const auto& px = pieces[0][static_cast<std::size_t>(dx + 1)];
          const auto& py = pieces[1][static_cast<std::size_t>(dy + 1)];
          const auto& pz = pieces[2][static_cast<std::size_t>(dz + 1)];
          for (const Piece& cz : pz)
            for (const Piece& cy : py)
              for (const Piece& cx : px) {
                const std::array<const Piece*, 3> p{&cx, &cy, &cz};
                HaloTransfer t;
                t.dstBlock = blk.id;
                t.direction = dir;
                for (int a = 0; a < 3; ++a) {
                  t.dstBox.lo[a] = p[a]->lo;
                  t.dstBox.hi[a] = p[a]->hi;
                }
                int fixedFace = -1;
                for (int a = 0; a < 3 && fixedFace < 0; ++a)
                  if (p[a]->fixed) fixedFace = p[a]->face;
                if (fixedFace >= 0) {
                  t.srcBlock = -1;
                  t.fixed = plan.zone.inflow[static_cast<std::size_t>(fixedFace)];
                } else {
                  t.srcBlock = plan.grid.linear({cx.blockIdx, cy.blockIdx, cz.blockIdx});
                  for (int a = 0; a < 3; ++a) {
                    const int len = p[a]->hi - p[a]->lo;
                    t.map[a] = {p[a]->start, p[a]->step};
                    if (p[a]->step > 0) {
                      t.srcBox.lo[a] = p[a]->start;
                      t.srcBox.hi[a] = p[a]->start + len;
                    } else if (p[a]->step < 0) {
                      t.srcBox.lo[a] = p[a]->start - len + 1;
                      t.srcBox.hi[a] = p[a]->start + 1;
                    } else {
                      t.srcBox.lo[a] = p[a]->start;
                      t.srcBox.hi[a] = p[a]->start + 1;
                    }
                    if (p[a]->mirrored) t.negateMask |= 1 << a;
                  }
                  if (t.srcBlock != blk.id && !std::binary_search(neighbors.begin(), neighbors.end(), t.srcBlock))
                    throw HaloError("block " + std::to_string(blk.id) + " needs halo data from block " +
                                    std::to_string(t.srcBlock) +
                                    ", which is not a neighbor (blocks thinner than the halo width are unsupported)");
                }
                halo.transfers.push_back(t);
              }
        }
  }

  halo.singular = findSingularPoints(plan);

  std::map<std::pair<int, int>, PeerMessage> pairs;
  for (std::size_t i = 0; i < halo.transfers.size(); ++i) {
    const auto& t = halo.transfers[i];
    if (t.srcBlock < 0) continue;
    const int rs = halo.rankOfBlock[static_cast<std::size_t>(t.srcBlock)];
    const int rd = halo.rankOfBlock[static_cast<std::size_t>(t.dstBlock)];
    if (rs == rd) continue;
    auto& m = pairs[{rs, rd}];
    m.srcRank = rs;
    m.dstRank = rd;
    m.transfers.push_back(static_cast<int>(i));
    m.payloadDoubles += static_cast<std::size_t>(t.cells()) * kNumVars;
  }
  for (std::size_t p = 0; p < halo.singular.size(); ++p) {
    const auto& sp = halo.singular[p];
    const int ro = halo.rankOfBlock[static_cast<std::size_t>(sp.owner)];
    for (int s : sp.sharers) {
      const int rs = halo.rankOfBlock[static_cast<std::size_t>(s)];
      if (s == sp.owner || rs == ro) continue;
      auto& m = pairs[{ro, rs}];
      m.srcRank = ro;
      m.dstRank = rs;
      m.singular.push_back({static_cast<int>(p), s});
    }
  }
  int id = 0;
  for (auto& [key, m] : pairs) {
    m.pairId = id++;
    halo.messages.push_back(std::move(m));
  }
  return halo;
}

namespace {

/// Visits the destination rows of a transfer: fn(srcRow, dstRow, n) where
/// srcRow points at the source of the row's first cell and the source
/// advances by map[0].step per cell.
template <class Fn>
void forRows(const HaloTransfer& t, const BlockField& src, const BlockField& dst, Fn&& fn) {
  const IndexBox& d = t.dstBox;
  const int n = d.hi[0] - d.lo[0];
  for (int k = d.lo[2]; k < d.hi[2]; ++k) {
    const int sk = t.map[2].start + t.map[2].step * (k - d.lo[2]);
    for (int j = d.lo[1]; j < d.hi[1]; ++j) {
      const int sj = t.map[1].start + t.map[1].step * (j - d.lo[1]);
      fn(src.offset(t.map[0].start, sj, sk), dst.offset(d.lo[0], j, k), n);
    }
  }
}

void copyRow(const double* s, int step, double* o, int n, bool neg) {
  if (step == 1 && !neg) {
    std::copy_n(s, n, o);
    return;
  }
  for (int i = 0; i < n; ++i) {
    const double v = s[static_cast<std::ptrdiff_t>(step) * i];
    o[i] = neg ? -v : v;
  }
}

bool negated(const HaloTransfer& t, int c) { return c >= 1 && c <= 3 && (t.negateMask & (1 << (c - 1))); }

}  // namespace

void applyTransfer(const HaloTransfer& t, const BlockField* src, BlockField& dst) {
  const IndexBox& d = t.dstBox;
  if (t.srcBlock < 0) {
    for (int k = d.lo[2]; k < d.hi[2]; ++k)
      for (int j = d.lo[1]; j < d.hi[1]; ++j)
        for (int i = d.lo[0]; i < d.hi[0]; ++i) dst.set(i, j, k, t.fixed);
    return;
  }
  for (int c = 0; c < kNumVars; ++c) {
    const bool neg = negated(t, c);
    const double* s = src->component(c).data();
    double* o = dst.component(c).data();
    forRows(t, *src, dst, [&](std::ptrdiff_t so, std::ptrdiff_t od, int n) {
      copyRow(s + so, t.map[0].step, o + od, n, neg);
    });
  }
}

void packTransfer(const HaloTransfer& t, const BlockField& src, std::vector<double>& out) {
  std::size_t pos = out.size();
  out.resize(pos + static_cast<std::size_t>(t.cells()) * kNumVars);
  for (int c = 0; c < kNumVars; ++c) {
    const double* s = src.component(c).data();
    forRows(t, src, src, [&](std::ptrdiff_t so, std::ptrdiff_t, int n) {
      copyRow(s + so, t.map[0].step, out.data() + pos, n, false);
      pos += static_cast<std::size_t>(n);
    });
  }
}

std::size_t unpackTransfer(const HaloTransfer& t, const double* data, BlockField& dst) {
  const IndexBox& d = t.dstBox;
  std::size_t pos = 0;
  for (int c = 0; c < kNumVars; ++c) {
    const bool neg = negated(t, c);
    double* o = dst.component(c).data();
    for (int k = d.lo[2]; k < d.hi[2]; ++k)
      for (int j = d.lo[1]; j < d.hi[1]; ++j) {
        const int n = d.hi[0] - d.lo[0];
        copyRow(data + pos, 1, o + dst.offset(d.lo[0], j, k), n, neg);
        pos += static_cast<std::size_t>(n);
      }
  }
  return pos;
}

Vec5 singularEstimate(const SingularPoint& p, const PartitionPlan& plan, const BlockField& block) {
  const auto& box = plan.blocks[static_cast<std::size_t>(block.id())].box;
  std::array<std::vector<int>, 3> cells;
  for (int a = 0; a < 3; ++a) {
    const int n = box.extent(a);
    int xl = p.node[a] - box.lo[a];
    if ((xl < 0 || xl > n) && plan.zone.periodic(a)) xl += plan.zone.cells[a];
    for (int i : {xl - 1, xl})
      if (i >= 0 && i < n) cells[a].push_back(i);
  }
  Vec5 sum{};
  int count = 0;
  for (int k : cells[2])
    for (int j : cells[1])
      for (int i : cells[0]) {
        sum = sum + block.get(i, j, k);
        ++count;
      }
  return count > 0 ? (1.0 / count) * sum : sum;
}

RankExchanger::RankExchanger(std::shared_ptr<const HaloPlan> halo, const PartitionPlan& plan, int rank,
                             Transport& transport, ExchangeOptions options)
    : halo_(std::move(halo)), plan_(plan), rank_(rank), transport_(transport), options_(options) {
  local_ = plan.blocksOfRank(rank);
  localOf_.assign(plan.blocks.size(), -1);
  for (std::size_t i = 0; i < local_.size(); ++i) localOf_[static_cast<std::size_t>(local_[i])] = static_cast<int>(i);
  for (std::size_t i = 0; i < halo_->transfers.size(); ++i) {
    const auto& t = halo_->transfers[i];
    const int rd = halo_->rankOfBlock[static_cast<std::size_t>(t.dstBlock)];
    const int rs = t.srcBlock < 0 ? rd : halo_->rankOfBlock[static_cast<std::size_t>(t.srcBlock)];
    if (rd == rank && rs == rank) localTransfers_.push_back(static_cast<int>(i));
    else if (rs == rank) remoteSendTransfers_.push_back(static_cast<int>(i));
    else if (rd == rank) remoteRecvTransfers_.push_back(static_cast<int>(i));
  }
  for (std::size_t m = 0; m < halo_->messages.size(); ++m) {
    if (halo_->messages[m].srcRank == rank) outgoing_.push_back(static_cast<int>(m));
    if (halo_->messages[m].dstRank == rank) incoming_.push_back(static_cast<int>(m));
  }
  singularValues_.resize(local_.size());
}

BlockField& RankExchanger::localField(std::vector<BlockField>& blocks, int global) const {
  return blocks[static_cast<std::size_t>(localOf_[static_cast<std::size_t>(global)])];
}
const BlockField& RankExchanger::localField(const std::vector<BlockField>& blocks, int global) const {
  return blocks[static_cast<std::size_t>(localOf_[static_cast<std::size_t>(global)])];
}

const Vec5* RankExchanger::singularValue(int p, int globalBlock) const {
  const int l = localOf_[static_cast<std::size_t>(globalBlock)];
  if (l < 0) return nullptr;
  for (const auto& [point, v] : singularValues_[static_cast<std::size_t>(l)])
    if (point == p) return &v;
  return nullptr;
}

void RankExchanger::storeOwnedSingular(const std::vector<BlockField>& blocks) {
  for (auto& v : singularValues_) v.clear();
  for (std::size_t p = 0; p < halo_->singular.size(); ++p) {
    const auto& sp = halo_->singular[p];
    if (halo_->rankOfBlock[static_cast<std::size_t>(sp.owner)] != rank_) continue;
    const Vec5 value = singularEstimate(sp, plan_, localField(blocks, sp.owner));
    for (int s : sp.sharers)
      if (halo_->rankOfBlock[static_cast<std::size_t>(s)] == rank_)
        singularValues_[static_cast<std::size_t>(localOf_[static_cast<std::size_t>(s)])].push_back({static_cast<int>(p), value});
  }
}

namespace {

void transmit(Transport& t, Message m, bool blocking) {
  if (blocking) {
    if (auto* ip = dynamic_cast<InProcessTransport*>(&t)) {
      ip->sendBlocking(std::move(m));
      return;
    }
  }
  t.send(std::move(m));
}

}  // namespace

double RankExchanger::exchange(std::vector<BlockField>& blocks, const std::function<void()>& overlap) {
  if (blocks.size() != local_.size()) throw HaloError("rank block list does not match the plan");
  Stopwatch total;
  const double cpu0 = threadCpuSeconds();
  const double wait0 = transport_.networkWaitSeconds();
  double overlapCpu = 0.0;
  epoch_ = (epoch_ + 1) % kCollectiveEpoch;
  const bool blocking = options_.mode == ExchangeMode::Blocking;
  const auto& transfers = halo_->transfers;
  const auto nTransfers = static_cast<std::uint32_t>(transfers.size());
  if (options_.resolveSingular) storeOwnedSingular(blocks);

  auto packSingular = [&](const PeerMessage& m, std::vector<double>& payload) {
    for (const auto& [p, receiver] : m.singular) {
      (void)receiver;
      const auto& sp = halo_->singular[static_cast<std::size_t>(p)];
      const Vec5 v = singularEstimate(sp, plan_, localField(blocks, sp.owner));
      payload.insert(payload.end(), v.v.begin(), v.v.end());
    }
  };

  // Post sends.
  if (options_.coalesce) {
    for (int mi : outgoing_) {
      const auto& m = halo_->messages[static_cast<std::size_t>(mi)];
      Message msg;
      msg.tag = makeTag(epoch_, static_cast<std::uint32_t>(m.pairId));
      msg.dest = static_cast<std::uint32_t>(m.dstRank);
      msg.payload = takeBuffer();
      msg.payload.reserve(m.payloadDoubles + (options_.resolveSingular ? m.singular.size() * kNumVars : 0));
      for (int ti : m.transfers) {
        const auto& t = transfers[static_cast<std::size_t>(ti)];
        packTransfer(t, localField(blocks, t.srcBlock), msg.payload);
      }
      if (options_.resolveSingular) packSingular(m, msg.payload);
      counters_.messages += 1;
      counters_.bytes += static_cast<std::int64_t>(msg.byteLength());
      transmit(transport_, std::move(msg), blocking);
    }
  } else {
    for (int ti : remoteSendTransfers_) {
      const auto& t = transfers[static_cast<std::size_t>(ti)];
      Message msg;
      msg.tag = makeTag(epoch_, static_cast<std::uint32_t>(ti));
      msg.dest = static_cast<std::uint32_t>(halo_->rankOfBlock[static_cast<std::size_t>(t.dstBlock)]);
      msg.payload = takeBuffer();
      packTransfer(t, localField(blocks, t.srcBlock), msg.payload);
      counters_.messages += 1;
      counters_.bytes += static_cast<std::int64_t>(msg.byteLength());
      transmit(transport_, std::move(msg), blocking);
    }
    if (options_.resolveSingular) {
      std::uint32_t entry = 0;
      for (const auto& m : halo_->messages)
        for (const auto& [p, receiver] : m.singular) {
          if (m.srcRank == rank_) {
            const auto& sp = halo_->singular[static_cast<std::size_t>(p)];
            Message msg;
            msg.tag = makeTag(epoch_, nTransfers + entry);
            msg.dest = static_cast<std::uint32_t>(m.dstRank);
            const Vec5 v = singularEstimate(sp, plan_, localField(blocks, sp.owner));
            msg.payload.assign(v.v.begin(), v.v.end());
            counters_.messages += 1;
            counters_.bytes += static_cast<std::int64_t>(msg.byteLength());
            transmit(transport_, std::move(msg), blocking);
          }
          (void)receiver;
          ++entry;
        }
    }
  }

  // Same-rank copies and physical boundaries.
  for (int ti : localTransfers_) {
    const auto& t = transfers[static_cast<std::size_t>(ti)];
    applyTransfer(t, t.srcBlock < 0 ? nullptr : &localField(blocks, t.srcBlock), localField(blocks, t.dstBlock));
    ++counters_.localCopies;
  }

  double overlapTime = 0.0;
  if (!blocking && overlap) {
    Stopwatch w;
    const double c0 = threadCpuSeconds();
    overlap();
    overlapCpu = threadCpuSeconds() - c0;
    overlapTime = w.seconds();
  }

  // Complete receives.
  if (options_.coalesce) {
    for (int mi : incoming_) {
      const auto& m = halo_->messages[static_cast<std::size_t>(mi)];
      Message msg = transport_.recv(m.srcRank, makeTag(epoch_, static_cast<std::uint32_t>(m.pairId)));
      std::size_t expect = m.payloadDoubles + (options_.resolveSingular ? m.singular.size() * kNumVars : 0);
      if (msg.payload.size() != expect)
        throw TransportError("message from rank " + std::to_string(m.srcRank) + " has " +
                                 std::to_string(msg.payload.size()) + " values, expected " + std::to_string(expect),
                             msg.tag);
      std::size_t pos = 0;
      for (int ti : m.transfers) {
        const auto& t = transfers[static_cast<std::size_t>(ti)];
        pos += unpackTransfer(t, msg.payload.data() + pos, localField(blocks, t.dstBlock));
      }
      if (options_.resolveSingular)
        for (const auto& [p, receiver] : m.singular) {
          Vec5 v;
          std::copy_n(msg.payload.data() + pos, kNumVars, v.v.begin());
          pos += kNumVars;
          singularValues_[static_cast<std::size_t>(localOf_[static_cast<std::size_t>(receiver)])].push_back({p, v});
        }
      recycle(std::move(msg.payload));
    }
  } else {
    for (int ti : remoteRecvTransfers_) {
      const auto& t = transfers[static_cast<std::size_t>(ti)];
      const int rs = halo_->rankOfBlock[static_cast<std::size_t>(t.srcBlock)];
      Message msg = transport_.recv(rs, makeTag(epoch_, static_cast<std::uint32_t>(ti)));
      if (msg.payload.size() != static_cast<std::size_t>(t.cells()) * kNumVars)
        throw TransportError("ghost box message has the wrong size", msg.tag);
      unpackTransfer(t, msg.payload.data(), localField(blocks, t.dstBlock));
      recycle(std::move(msg.payload));
    }
    if (options_.resolveSingular) {
      std::uint32_t entry = 0;
      for (const auto& m : halo_->messages)
        for (const auto& [p, receiver] : m.singular) {
          if (m.dstRank == rank_) {
            Message msg = transport_.recv(m.srcRank, makeTag(epoch_, nTransfers + entry));
            Vec5 v;
            std::copy_n(msg.payload.data(), kNumVars, v.v.begin());
            singularValues_[static_cast<std::size_t>(localOf_[static_cast<std::size_t>(receiver)])].push_back({p, v});
          }
          ++entry;
        }
    }
  }

  if (blocking && overlap) {
    Stopwatch w;
    const double c0 = threadCpuSeconds();
    overlap();
    overlapCpu = threadCpuSeconds() - c0;
    overlapTime = w.seconds();
  }
  counters_.epochs += 1;
  counters_.overlapTime += overlapTime;
  // Time-slicing ranks on few cores inflates wall waits with peers' compute,
  // so communication is charged as own CPU work plus network waits.
  const double comm = (threadCpuSeconds() - cpu0 - overlapCpu) + (transport_.networkWaitSeconds() - wait0);
  counters_.commTime += comm;
  counters_.commWallTime += total.seconds() - overlapTime;
  return comm;
}

std::vector<double> RankExchanger::takeBuffer() {
  if (spare_.empty()) return {};
  std::vector<double> b = std::move(spare_.back());
  spare_.pop_back();
  b.clear();
  return b;
}

void RankExchanger::recycle(std::vector<double>&& buffer) {
  if (spare_.size() < 64) spare_.push_back(std::move(buffer));
}

void RankExchanger::resolveSingularPoints(const std::vector<BlockField>& blocks) {
  epoch_ = (epoch_ + 1) % kCollectiveEpoch;
  storeOwnedSingular(blocks);
  const auto base = static_cast<std::uint32_t>(halo_->transfers.size());
  std::uint32_t entry = 0;
  for (const auto& m : halo_->messages)
    for (const auto& [p, receiver] : m.singular) {
      (void)receiver;
      if (m.srcRank == rank_) {
        const auto& sp = halo_->singular[static_cast<std::size_t>(p)];
        Message msg;
        msg.tag = makeTag(epoch_, base + entry);
        msg.dest = static_cast<std::uint32_t>(m.dstRank);
        const Vec5 v = singularEstimate(sp, plan_, localField(blocks, sp.owner));
        msg.payload.assign(v.v.begin(), v.v.end());
        counters_.messages += 1;
        counters_.bytes += static_cast<std::int64_t>(msg.byteLength());
        transport_.send(std::move(msg));
      }
      ++entry;
    }
  entry = 0;
  for (const auto& m : halo_->messages)
    for (const auto& [p, receiver] : m.singular) {
      if (m.dstRank == rank_) {
        Message msg = transport_.recv(m.srcRank, makeTag(epoch_, base + entry));
        Vec5 v;
        std::copy_n(msg.payload.data(), kNumVars, v.v.begin());
        singularValues_[static_cast<std::size_t>(localOf_[static_cast<std::size_t>(receiver)])].push_back({p, v});
      }
      ++entry;
    }
}

std::vector<std::vector<double>> RankReduction::allGather(const std::vector<double>& local) {
  const int n = t_.size();
  const int me = t_.rank();
  const std::uint32_t up = makeTag(kCollectiveEpoch, 2 * (seq_ & 0x7FFFFFu));
  const std::uint32_t down = makeTag(kCollectiveEpoch, 2 * (seq_ & 0x7FFFFFu) + 1);
  ++seq_;
  std::vector<std::vector<double>> all(static_cast<std::size_t>(n));
  if (n == 1) {
    all[0] = local;
    return all;
  }
  if (me != 0) {
    Message m;
    m.tag = up;
    m.dest = 0;
    m.payload = local;
    t_.send(std::move(m));
    Message back = t_.recv(0, down);
    // Layout: n lengths, then the concatenated vectors.
    std::size_t pos = static_cast<std::size_t>(n);
    for (int r = 0; r < n; ++r) {
      const auto len = static_cast<std::size_t>(back.payload[static_cast<std::size_t>(r)]);
      all[static_cast<std::size_t>(r)].assign(back.payload.begin() + static_cast<std::ptrdiff_t>(pos),
                                              back.payload.begin() + static_cast<std::ptrdiff_t>(pos + len));
      pos += len;
    }
    return all;
  }
  all[0] = local;
  for (int r = 1; r < n; ++r) all[static_cast<std::size_t>(r)] = t_.recv(r, up).payload;
  std::vector<double> flat;
  for (const auto& v : all) flat.push_back(static_cast<double>(v.size()));
  for (const auto& v : all) flat.insert(flat.end(), v.begin(), v.end());
  for (int r = 1; r < n; ++r) {
    Message m;
    m.tag = down;
    m.dest = static_cast<std::uint32_t>(r);
    m.payload = flat;
    t_.send(std::move(m));
  }
  return all;
}

double RankReduction::sum(double local) {
  double s = 0.0;
  for (const auto& v : allGather({local})) s += v.at(0);
  return s;
}

double RankReduction::min(double local) {
  double s = std::numeric_limits<double>::infinity();
  for (const auto& v : allGather({local})) s = std::min(s, v.at(0));
  return s;
}

double RankReduction::max(double local) {
  double s = -std::numeric_limits<double>::infinity();
  for (const auto& v : allGather({local})) s = std::max(s, v.at(0));
  return s;
}

CommStats commStats(const ExchangeCounters& c, double compTime) {
  CommStats s;
  const double epochs = c.epochs > 0 ? static_cast<double>(c.epochs) : 1.0;
  s.messagesPerEpoch = static_cast<double>(c.messages) / epochs;
  s.bytesPerEpoch = static_cast<double>(c.bytes) / epochs;
  s.commTime = c.messages > 0 ? c.commTime : 0.0;
  s.commTimePerEpoch = s.commTime / epochs;
  s.compTime = compTime;
  s.compOnly = s.commTime <= 0.0;
  s.ratio = s.compOnly ? std::numeric_limits<double>::infinity() : compTime / s.commTime;
  return s;
}

EpochTraffic epochTraffic(const HaloPlan& halo, int rank, const ExchangeOptions& options) {
  EpochTraffic t;
  for (const auto& m : halo.messages) {
    if (m.srcRank != rank) continue;
    const auto extra = options.resolveSingular ? m.singular.size() * kNumVars : 0;
    if (options.coalesce) {
      t.messages += 1;
    } else {
      t.messages += static_cast<std::int64_t>(m.transfers.size()) +
                    (options.resolveSingular ? static_cast<std::int64_t>(m.singular.size()) : 0);
    }
    t.bytes += static_cast<std::int64_t>((m.payloadDoubles + extra) * sizeof(double));
  }
  return t;
}

}  // namespace hcfd::exchange
