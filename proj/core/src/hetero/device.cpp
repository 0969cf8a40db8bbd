#include "hcfd/hetero/device.hpp"

#include <thread>

namespace hcfd::hetero {

void DeviceModel::validate() const {
  if (workerCount < 1) throw ConfigError("device workerCount must be >= 1");
  if (!(relativeThroughput > 0.0)) throw ConfigError("device throughput must be positive");
  const bool cop = deviceClass == DeviceClass::Coprocessor;
  if (cop && !link) throw ConfigError("coprocessor device needs a link model");
  if (!cop && link) throw ConfigError("cpu device must not have a link model");
  if (link && (!(link->bandwidth > 0.0) || link->latency < 0.0))
    throw ConfigError("link needs bandwidth > 0 and latency >= 0");
}

void Calibration::validate() const {
  if (!(cellRate > 0.0)) throw ConfigError("calibration cellRate must be positive");
  if (network.latency < 0.0 || network.bandwidth < 0.0) throw ConfigError("network model must be non-negative");
  if (!(hostCopyBandwidth > 0.0)) throw ConfigError("hostCopyBandwidth must be positive");
  if (recomputeCostPerCell < 0.0) throw ConfigError("recomputeCostPerCell must be >= 0");
}

DeviceModels DeviceModels::defaults() {
  DeviceModels m;
  m.cpu.deviceClass = DeviceClass::Cpu;
  m.coprocessor.deviceClass = DeviceClass::Coprocessor;
  m.coprocessor.relativeThroughput = 1.3;
  m.coprocessor.link = LinkModel{2.0e8, 1.0e-5};
  return m;
}

std::string Device::name() const {
  return std::string(slot.deviceClass == DeviceClass::Cpu ? "cpu" : "cop") + std::to_string(slot.index);
}

Runtime::Runtime(int rank, std::vector<Device> devices, Calibration calibration, std::vector<std::string> warnings)
    : rank_(rank), devices_(std::move(devices)), calibration_(calibration), warnings_(std::move(warnings)) {}

int Runtime::find(DeviceClass c, int index) const {
  for (const auto& d : devices_)
    if (d.slot.deviceClass == c && d.slot.index == index) return d.id;
  return -1;
}

int Runtime::coprocessorCount() const {
  int n = 0;
  for (const auto& d : devices_) n += d.slot.deviceClass == DeviceClass::Coprocessor;
  return n;
}

int Runtime::workerThreads() const {
  int n = 0;
  for (const auto& d : devices_) n += d.pool ? d.pool->threads() : 0;
  return n;
}

std::unique_ptr<Runtime> configureDevices(const partition::NodeTopology& topology, const DeviceModels& models,
                                          int ranks, int rank, const ConfigureOptions& options) {
  topology.validate();
  models.calibration.validate();
  const auto slots = partition::rankDevices(topology, ranks, rank);
  if (slots.empty()) throw ConfigError("rank " + std::to_string(rank) + " has no devices");

  std::vector<Device> devices;
  std::vector<std::string> warnings;
  int threads = 0;
  int core = 0;
  for (const auto& slot : slots) {
    Device d;
    d.id = static_cast<int>(devices.size());
    d.slot = slot;
    d.model = slot.deviceClass == DeviceClass::Cpu ? models.cpu : models.coprocessor;
    d.model.deviceClass = slot.deviceClass;
    d.model.validate();
    if (slot.deviceClass == DeviceClass::Cpu) d.model.relativeThroughput *= slot.share;
    const int n = options.spawnThreads && d.model.workerCount > 1 ? d.model.workerCount : 0;
    d.pool = std::make_unique<WorkerPool>(n, d.model.pinWorkers, core);
    if (d.model.pinWorkers && n > 0 && !d.pool->pinned())
      warnings.push_back(d.name() + ": pinning not available");
    core += n;
    threads += n;
    devices.push_back(std::move(d));
  }

  const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const int limit = options.threadLimit > 0 ? options.threadLimit : 4 * hw;
  if (threads > limit)
    warnings.push_back("rank " + std::to_string(rank) + " starts " + std::to_string(threads) +
                       " worker threads, above the limit of " + std::to_string(limit));
  return std::make_unique<Runtime>(rank, std::move(devices), models.calibration, std::move(warnings));
}

}  // namespace hcfd::hetero
