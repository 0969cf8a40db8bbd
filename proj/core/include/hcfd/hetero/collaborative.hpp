#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hcfd/exchange/halo.hpp"
#include "hcfd/hetero/offload.hpp"
#include "hcfd/hetero/timeline.hpp"
#include "hcfd/integrator/integrator.hpp"

namespace hcfd::hetero {

/// Per-stage load of one device, the input of the schedule model.
struct DeviceWork {
  std::string lane;
  DeviceClass deviceClass = DeviceClass::Cpu;
  double rate = 1.0;                  ///< cell updates per second
  std::int64_t cells = 0;
  std::int64_t remoteShellCells = 0;  ///< cells whose stencils read other ranks' ghosts
  std::optional<LinkModel> link;
  std::uint64_t bytesIn = 0;
  std::uint64_t bytesOut = 0;
  bool waitsForNetwork = false;       ///< coprocessor inputs include other ranks' ghosts
};

struct StageWork {
  std::vector<DeviceWork> devices;
  std::int64_t netMessages = 0;
  std::uint64_t netBytes = 0;
  std::uint64_t reconcileBytes = 0;  ///< ghost copies between devices of the rank
};

/// Modeled schedule of one stage starting at t = 0.
///
/// Overlapped: coprocessors transfer in, compute and transfer out from the
/// start; the rank's messages go out at once; CPUs compute cells that do not
/// read other ranks' ghosts first and the rest once the messages arrived.
/// Serialized: messages, then CPUs, then the coprocessors. Both end with the
/// reconciliation copies on the first lane.
Timeline modelStage(const StageWork& work, const Calibration& calibration, bool overlap, int stage = 0);

struct CollaborativeOptions {
  bool overlap = true;
  OffloadMode mode = OffloadMode::Async;
  int tileSize = 16;
  std::chrono::milliseconds epochTimeout{60000};
  bool recordTimeline = true;
};

/// Runs RK stages with the blocks of each group on its device. Coprocessor
/// groups go through offloadGroup; the modeled timeline of every stage is
/// appended to timeline(). Field values equal the homogeneous step bit for
/// bit: each block's residual and update are the same operations in the same
/// order, only the executing device differs.
class CollaborativeStepper {
 public:
  CollaborativeStepper(const partition::PartitionPlan& plan, std::shared_ptr<const exchange::HaloPlan> halo,
                       Runtime& runtime, exchange::RankExchanger& exchanger, GasModel gas,
                       CollaborativeOptions options = {});

  /// Reserves persistent device buffers and primes constant slices. Throws
  /// DeviceBudgetError when a coprocessor's blocks do not fit.
  void warmUp(const std::vector<BlockField>& blocks);

  /// One three-stage step. `norm` receives the global residual norm of the
  /// first stage; `reduction` may be null for a single rank.
  void step(integrator::LocalState& state, double dt, RunMetrics& metrics, double& norm,
            integrator::Reduction* reduction);

  /// Static per-stage work of this rank (no residency hits).
  StageWork stageWork() const;

  const Timeline& timeline() const { return timeline_; }
  /// Modeled seconds of the steps so far, slowest rank per stage.
  double modeledTime() const { return modeledTime_; }
  double modeledSerializedTime() const { return modeledSerialized_; }
  const ResidencyCache& residency() const { return cache_; }
  const std::vector<DeviceMemory>& deviceMemory() const { return memory_; }
  /// Local blocks of each device (indices into the rank's block list).
  const std::vector<std::vector<int>>& deviceBlocks() const { return deviceBlocks_; }
  const CollaborativeOptions& options() const { return options_; }

 private:
  OffloadTask makeTask(int device, int stage, std::vector<BlockField>& blocks,
                       std::vector<InteriorArray>& base, double dt);
  void runDevice(int device, int stage, std::vector<BlockField>& blocks, const std::vector<InteriorArray>& base,
                 double dt);

  const partition::PartitionPlan& plan_;
  std::shared_ptr<const exchange::HaloPlan> halo_;
  Runtime& runtime_;
  exchange::RankExchanger& exchanger_;
  GasModel gas_;
  CollaborativeOptions options_;
  std::vector<std::vector<int>> deviceBlocks_;
  std::vector<int> deviceOfLocal_;
  std::vector<std::unique_ptr<integrator::ResidualEngine>> engines_;
  integrator::ResidualField residual_;
  std::vector<InteriorArray> base_;
  ResidencyCache cache_;
  std::vector<DeviceMemory> memory_;
  bool warm_ = false;
  // Per device: ghost slices read from other devices, slices other devices read.
  std::vector<std::vector<Slice>> ghostIn_;
  std::vector<std::vector<Slice>> sliceOut_;
  std::vector<std::vector<Slice>> constantIn_;
  Timeline timeline_;
  double modeledTime_ = 0.0;
  double modeledSerialized_ = 0.0;
};

/// Degenerates to integrator::rk3Step-equivalent results for any device mix.
void collaborativeStep(CollaborativeStepper& stepper, integrator::LocalState& state, double dt,
                       RunMetrics& metrics, double& norm, integrator::Reduction* reduction = nullptr);

}  // namespace hcfd::hetero
