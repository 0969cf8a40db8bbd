#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hcfd/exchange/halo.hpp"
#include "hcfd/harness/case.hpp"
#include "hcfd/harness/dump.hpp"
#include "hcfd/hetero/collaborative.hpp"

namespace hcfd::harness {

/// Outcome of one rank.
struct RankResult {
  int rank = 0;
  RunMetrics metrics;
  exchange::ExchangeCounters exchange;
  std::vector<BlockField> blocks;  ///< final local blocks, ascending id
  hetero::Timeline timeline;       ///< modeled, collaborative runs only
  hetero::StageWork work;          ///< steady per-stage work, collaborative runs only
  hetero::ResidencyCounters residency;
  double modeledTime = 0.0;        ///< seconds, slowest rank per stage
  double modeledSerialized = 0.0;
  std::vector<std::string> warnings;
};

struct RunResult {
  partition::PartitionPlan plan;
  /// Global metrics: wall time of the slowest rank, comp and comm summed.
  RunMetrics metrics;
  std::vector<RankResult> ranks;
  std::vector<BlockField> field;  ///< every block, indexed by id
  double modeledTime = 0.0;
  double modeledSerialized = 0.0;
  std::vector<double> trialWallTimes;  ///< one per best-of trial

  double modeledMcups() const;
  /// CPU time of the slowest rank in its fastest iteration.
  double rankCpuPerIteration() const;
  FieldDump dump(bool perBlock = false) const { return makeDump(field, plan, perBlock); }
};

struct RunOptions {
  bool keepField = true;
  /// Write dumps, metrics and timelines to case.output.dir when it is set.
  bool writeOutputs = true;
  /// Called on rank 0 after every step.
  std::function<void(const integrator::StepInfo&)> onStep;
  hetero::ConfigureOptions devices;
};

/// Blocks, groups and devices for a case: explicit cuts, a block count, a
/// block size limit or one block per rank, in that order of precedence.
partition::PartitionPlan makePlan(const CaseFile& c);

/// Runs one rank of a case over any transport: initialization, the timed
/// main loop and the final local state.
RankResult runRank(const CaseFile& c, const partition::PartitionPlan& plan,
                   std::shared_ptr<const exchange::HaloPlan> halo, exchange::Transport& transport,
                   const RunOptions& options = {});

/// Sends every rank's blocks to rank 0, which returns them all by id; other
/// ranks return an empty list.
std::vector<BlockField> gatherBlocks(exchange::Transport& transport, const partition::PartitionPlan& plan,
                                     const std::vector<BlockField>& local);

/// Runs a case with one thread per rank over the in-process transport,
/// best-of-N by wall time. Divergence and invalid states propagate as the
/// integrator's errors.
RunResult runCase(const CaseFile& c, const std::optional<partition::PartitionPlan>& plan = std::nullopt,
                  const RunOptions& options = {});

/// Writes metrics.csv, field.dump and timeline.csv under `dir`.
void writeRunOutputs(const CaseFile& c, const RunResult& r, const std::string& dir);

}  // namespace hcfd::harness
