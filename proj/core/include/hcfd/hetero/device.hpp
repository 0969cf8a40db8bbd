#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hcfd/exchange/transport.hpp"
#include "hcfd/partition/plan.hpp"
#include "hcfd/util/worker_pool.hpp"

namespace hcfd::hetero {

using partition::DeviceClass;

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Host <-> coprocessor link: a transfer of n bytes takes latency + n / bandwidth.
struct LinkModel {
  double bandwidth = 8.0e9;  ///< bytes per second
  double latency = 1.0e-5;   ///< seconds

  double transferSeconds(std::uint64_t bytes) const {
    return latency + static_cast<double>(bytes) / bandwidth;
  }
};

struct DeviceModel {
  DeviceClass deviceClass = DeviceClass::Cpu;
  int workerCount = 1;
  double relativeThroughput = 1.0;  ///< cell updates per second relative to one CPU socket
  std::optional<LinkModel> link;    ///< coprocessors only
  bool pinWorkers = false;
  std::uint64_t memoryBytes = 8ull << 30;  ///< device buffer budget (coprocessors)

  /// Throws ConfigError: workerCount < 1, throughput <= 0, link present on a
  /// CPU or missing on a coprocessor, non-positive link parameters.
  void validate() const;
};

/// Scale of the modeled machine. All values are synthetic desk defaults.
struct Calibration {
  double cellRate = 2.0e6;           ///< cell-stage updates per second at throughput 1
  exchange::NetworkModel network{2.0e-6, 5.0e9};  ///< inter-node link
  double hostCopyBandwidth = 1.0e10;  ///< intra-node reconciliation copies
  double recomputeCostPerCell = 0.25; ///< induced-field recompute, in cell-stage units

  void validate() const;
};

/// CPU and coprocessor models of one node.
struct DeviceModels {
  DeviceModel cpu;
  DeviceModel coprocessor;
  Calibration calibration;

  /// Desk defaults: coprocessor 1.3x a CPU socket behind a slow link.
  static DeviceModels defaults();
};

/// One device of a rank with its worker pool.
struct Device {
  int id = 0;  ///< position in Runtime::devices(), CPUs first
  partition::DeviceSlot slot;
  DeviceModel model;  ///< CPU throughput already scaled by the slot share
  std::unique_ptr<WorkerPool> pool;

  std::string name() const;
  double cellRate(const Calibration& c) const { return c.cellRate * model.relativeThroughput; }
};

struct ConfigureOptions {
  /// Warn when the rank starts more worker threads than this (0: four per
  /// hardware thread).
  int threadLimit = 0;
  /// Start real worker threads; false keeps every pool inline.
  bool spawnThreads = true;
};

/// Per-rank heterogeneous runtime: one coordinator (the calling thread) and
/// one worker pool per device.
class Runtime {
 public:
  Runtime(int rank, std::vector<Device> devices, Calibration calibration,
          std::vector<std::string> warnings);

  int rank() const { return rank_; }
  const Calibration& calibration() const { return calibration_; }
  std::vector<Device>& devices() { return devices_; }
  const std::vector<Device>& devices() const { return devices_; }
  /// Index of the device (class, index-within-class) or -1.
  int find(DeviceClass c, int index) const;
  int coprocessorCount() const;
  int workerThreads() const;
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  int rank_;
  std::vector<Device> devices_;
  Calibration calibration_;
  std::vector<std::string> warnings_;
};

/// Builds the devices of `rank` from the topology (see partition::rankDevices).
/// A device with one worker gets an inline pool (serial fallback). Starting
/// more threads than the limit adds a warning; it is never an error.
std::unique_ptr<Runtime> configureDevices(const partition::NodeTopology& topology, const DeviceModels& models,
                                          int ranks, int rank, const ConfigureOptions& options = {});

}  // namespace hcfd::hetero
