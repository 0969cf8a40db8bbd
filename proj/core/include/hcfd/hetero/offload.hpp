#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <future>
#include <vector>

#include "hcfd/core/box.hpp"
#include "hcfd/hetero/device.hpp"
#include "hcfd/hetero/residency.hpp"

namespace hcfd::hetero {

enum class KernelKind { InvFlux, VisFlux, Update };
const char* kernelName(KernelKind k);

/// Part of one component of one block, moved as a unit.
struct Slice {
  BufferKey key;
  IndexBox box;

  std::uint64_t bytes() const { return static_cast<std::uint64_t>(box.cells()) * sizeof(double); }
};

/// Work of one group for one stage: every kernel goes in one submission.
struct OffloadTask {
  int group = 0;
  int device = 0;                   ///< index into Runtime::devices()
  std::vector<KernelKind> kernels;  ///< fused, in order
  std::vector<Slice> inputs;        ///< host data the kernels read
  std::vector<Slice> induced;       ///< derivable inputs: recomputed or moved
  std::vector<Slice> outputs;       ///< device results the host needs back
  std::vector<BufferKey> produced;  ///< buffers the kernels overwrite on the device
  std::int64_t cells = 0;           ///< work size for the compute model
  std::function<void()> work;       ///< host execution of the kernels
};

enum class OffloadMode { Sync, Async };

struct OffloadResult {
  int device = 0;
  std::uint64_t bytesIn = 0;
  std::uint64_t bytesOut = 0;
  int hits = 0;
  int misses = 0;
  int recomputed = 0;
  double transferIn = 0.0;   ///< modeled seconds
  double compute = 0.0;
  double transferOut = 0.0;
  double wallSeconds = 0.0;  ///< host execution time of the kernels

  double modeledSeconds() const { return transferIn + compute + transferOut; }
};

/// Result of an offload; wait() may be called exactly once.
class OffloadHandle {
 public:
  OffloadHandle() = default;
  OffloadHandle(std::future<void> done, OffloadResult planned, std::shared_ptr<double> wall)
      : done_(std::move(done)), result_(planned), wall_(std::move(wall)) {}

  bool valid() const { return done_.valid(); }
  bool ready() const;
  /// Blocks until the kernels finished. Throws Error when called twice or
  /// when the timeout expires (a stuck epoch); rethrows kernel errors.
  OffloadResult wait(std::chrono::milliseconds timeout = std::chrono::milliseconds(60000));

 private:
  std::future<void> done_;
  OffloadResult result_;
  std::shared_ptr<double> wall_;
};

/// Modeled seconds of `cells` cell updates on `device`.
double computeSeconds(const Device& device, const Calibration& c, std::int64_t cells);

/// Submits a task to a coprocessor. Inputs already current on the device are
/// not moved; induced inputs are recomputed when that is cheaper than the
/// link; the rest is charged latency + bytes / bandwidth as one transfer each
/// way. Sync mode returns after the kernels ran. Throws ConfigError when the
/// device is not a coprocessor.
OffloadHandle offloadGroup(Runtime& runtime, ResidencyCache& cache, OffloadTask task, OffloadMode mode);

}  // namespace hcfd::hetero
