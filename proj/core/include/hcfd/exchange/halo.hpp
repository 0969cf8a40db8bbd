#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "hcfd/core/field.hpp"
#include "hcfd/exchange/transport.hpp"
#include "hcfd/integrator/integrator.hpp"
#include "hcfd/partition/plan.hpp"

namespace hcfd::exchange {

class HaloError : public Error {
 public:
  using Error::Error;
};

/// Source index along one axis: src = start + step * (dst - dstBox.lo).
/// step is +1 (copy or periodic wrap), -1 (wall mirror) or 0 (extrapolation).
struct AxisMap {
  int start = 0;
  int step = 1;
};

/// One ghost box of one block and where its values come from.
struct HaloTransfer {
  int dstBlock = 0;
  IndexBox dstBox;          ///< local ghost cells of dstBlock
  int srcBlock = -1;        ///< -1: fixed inflow state
  std::array<AxisMap, 3> map{};
  IndexBox srcBox;          ///< local interior cells of srcBlock read by the copy
  int negateMask = 0;       ///< bit a: negate momentum component 1 + a
  Vec5 fixed{};
  Index3 direction{};       ///< which of the 26 neighbor directions (-1, 0, 1)

  std::int64_t cells() const { return dstBox.cells(); }
};

/// Vertex shared by three or more blocks.
struct SingularPoint {
  Index3 node{};             ///< global grid-node coordinates
  std::vector<int> sharers;  ///< ascending block ids
  int owner = -1;            ///< lowest sharer
};

/// Coalesced traffic from one rank to another: every transfer between the
/// pair plus the singular-point values the sender owns for the receiver.
struct PeerMessage {
  int srcRank = 0;
  int dstRank = 0;
  int pairId = 0;
  std::vector<int> transfers;                      ///< indices into HaloPlan::transfers
  std::vector<std::pair<int, int>> singular;       ///< (point index, receiving block)
  std::size_t payloadDoubles = 0;
};

struct HaloPlan {
  int haloWidth = 5;
  int ranks = 1;
  std::vector<int> rankOfBlock;
  std::vector<HaloTransfer> transfers;  ///< ordered by (dstBlock, direction)
  std::vector<PeerMessage> messages;    ///< cross-rank pairs, ordered by (src, dst)
  std::vector<SingularPoint> singular;

  /// Number of distinct ordered rank pairs that exchange data.
  int neighborRankPairs() const { return static_cast<int>(messages.size()); }
};

/// Builds every ghost box of every block (faces, edges, corners; periodic
/// wrap; physical boundaries), coalesces cross-rank traffic per rank pair and
/// lists singular points. Throws HaloError naming the block pair when a ghost
/// needs data from a block that is not a neighbor (blocks thinner than the
/// halo width), or when a wall-bounded block is thinner than the halo.
HaloPlan buildHaloPlan(const partition::PartitionPlan& plan);

/// Copies one transfer from `src` into `dst` (or fills the fixed state).
void applyTransfer(const HaloTransfer& t, const BlockField* src, BlockField& dst);

/// Packs the source cells of a transfer in destination order, component-major.
void packTransfer(const HaloTransfer& t, const BlockField& src, std::vector<double>& out);
/// Inverse of packTransfer; applies mirror negation. Returns values consumed.
std::size_t unpackTransfer(const HaloTransfer& t, const double* data, BlockField& dst);

/// Local estimate of a singular point: mean of the block's interior cells
/// touching the vertex.
Vec5 singularEstimate(const SingularPoint& p, const partition::PartitionPlan& plan,
                      const BlockField& block);

enum class ExchangeMode { Blocking, NonBlocking };

struct ExchangeOptions {
  ExchangeMode mode = ExchangeMode::NonBlocking;
  bool coalesce = true;          ///< false: one message per ghost box
  bool resolveSingular = false;  ///< carry singular-point values with the halos
};

/// Counters accumulated over exchange epochs.
struct ExchangeCounters {
  std::int64_t epochs = 0;
  std::int64_t messages = 0;
  std::int64_t bytes = 0;
  std::int64_t localCopies = 0;
  /// CPU seconds inside exchanges plus network waits, overlap work excluded.
  double commTime = 0.0;
  double commWallTime = 0.0;  ///< wall seconds inside exchanges, overlap work excluded
  double overlapTime = 0.0;   ///< wall seconds of overlap work
};

/// Halo exchange for the blocks of one rank. Local blocks are the rank's
/// blocks in ascending global id; ghosts are filled by direct copies within
/// the rank and by messages across ranks.
class RankExchanger : public integrator::HaloExchanger {
 public:
  RankExchanger(std::shared_ptr<const HaloPlan> halo, const partition::PartitionPlan& plan, int rank,
                Transport& transport, ExchangeOptions options = {});

  const std::vector<int>& localBlocks() const { return local_; }
  int localIndex(int globalBlock) const { return localOf_[static_cast<std::size_t>(globalBlock)]; }

  double exchange(std::vector<BlockField>& blocks, const std::function<void()>& overlap) override;

  /// Sends owner values of singular points as separate small messages and
  /// stores the result for every local sharer.
  void resolveSingularPoints(const std::vector<BlockField>& blocks);

  /// Resolved value of point `p` as seen by local block `globalBlock`.
  const Vec5* singularValue(int p, int globalBlock) const;

  const ExchangeCounters& counters() const { return counters_; }
  void resetCounters() { counters_ = {}; }
  const ExchangeOptions& options() const { return options_; }
  void setOptions(const ExchangeOptions& o) { options_ = o; }

 private:
  BlockField& localField(std::vector<BlockField>& blocks, int global) const;
  const BlockField& localField(const std::vector<BlockField>& blocks, int global) const;
  void storeOwnedSingular(const std::vector<BlockField>& blocks);
  /// Payload buffers of received messages, reused for sends.
  std::vector<double> takeBuffer();
  void recycle(std::vector<double>&& buffer);

  std::shared_ptr<const HaloPlan> halo_;
  const partition::PartitionPlan& plan_;
  int rank_;
  Transport& transport_;
  ExchangeOptions options_;
  std::vector<int> local_;
  std::vector<int> localOf_;
  std::vector<int> localTransfers_;   ///< same-rank copies and fixed fills
  std::vector<int> outgoing_;         ///< messages indices sent by this rank
  std::vector<int> incoming_;
  std::vector<int> remoteSendTransfers_;  ///< naive mode: transfers sent by this rank
  std::vector<int> remoteRecvTransfers_;
  std::uint32_t epoch_ = 0;
  std::vector<std::vector<std::pair<int, Vec5>>> singularValues_;  ///< per local block: (point, value)
  ExchangeCounters counters_;
  std::vector<std::vector<double>> spare_;
};

/// Sum/min/max over ranks: gather to rank 0 in rank order, then broadcast.
class RankReduction : public integrator::Reduction {
 public:
  explicit RankReduction(Transport& t) : t_(t) {}
  double sum(double local) override;
  double min(double local) override;
  double max(double local) override;
  /// Gathers one vector per rank on every rank.
  std::vector<std::vector<double>> allGather(const std::vector<double>& local);
  void barrier() { (void)allGather({}); }

 private:
  Transport& t_;
  std::uint32_t seq_ = 0;
};

/// Per-epoch communication metrics.
struct CommStats {
  double messagesPerEpoch = 0.0;
  double bytesPerEpoch = 0.0;
  double commTimePerEpoch = 0.0;
  double commTime = 0.0;
  double compTime = 0.0;
  double ratio = 0.0;     ///< comp / comm; +inf when comp-only
  bool compOnly = false;
};

CommStats commStats(const ExchangeCounters& counters, double compTime);

/// Message count and volume one exchange epoch would produce for a rank.
struct EpochTraffic {
  std::int64_t messages = 0;
  std::int64_t bytes = 0;
};
EpochTraffic epochTraffic(const HaloPlan& halo, int rank, const ExchangeOptions& options);

}  // namespace hcfd::exchange
