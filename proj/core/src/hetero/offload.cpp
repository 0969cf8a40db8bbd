#include "hcfd/hetero/offload.hpp"

#include "hcfd/integrator/metrics.hpp"

namespace hcfd::hetero {

const char* kernelName(KernelKind k) {
  switch (k) {
    case KernelKind::InvFlux: return "invFlux";
    case KernelKind::VisFlux: return "visFlux";
    case KernelKind::Update: return "update";
  }
  return "?";
}

bool OffloadHandle::ready() const {
  return done_.valid() && done_.wait_for(std::chrono::seconds(0)) == std::future_status::ready;
}

OffloadResult OffloadHandle::wait(std::chrono::milliseconds timeout) {
  if (!done_.valid()) throw Error("offload handle has no pending result (already waited?)");
  if (done_.wait_for(timeout) != std::future_status::ready)
    throw Error("offload to device " + std::to_string(result_.device) + " did not finish within " +
                std::to_string(timeout.count()) + " ms");
  done_.get();
  if (wall_) result_.wallSeconds = *wall_;
  return result_;
}

double computeSeconds(const Device& device, const Calibration& c, std::int64_t cells) {
  return static_cast<double>(cells) / device.cellRate(c);
}

OffloadHandle offloadGroup(Runtime& runtime, ResidencyCache& cache, OffloadTask task, OffloadMode mode) {
  if (task.device < 0 || task.device >= static_cast<int>(runtime.devices().size()))
    throw ConfigError("offload to unknown device " + std::to_string(task.device));
  Device& dev = runtime.devices()[static_cast<std::size_t>(task.device)];
  if (dev.slot.deviceClass != DeviceClass::Coprocessor || !dev.model.link)
    throw ConfigError("offload target " + dev.name() + " is not a coprocessor");
  const LinkModel& link = *dev.model.link;
  const Calibration& cal = runtime.calibration();

  OffloadResult r;
  r.device = task.device;
  for (const Slice& s : task.inputs) {
    if (cache.acquire(task.device, s.key, s.bytes())) {
      ++r.hits;
    } else {
      ++r.misses;
      r.bytesIn += s.bytes();
    }
  }
  for (const Slice& s : task.induced) {
    if (cache.current(task.device, s.key)) {
      cache.acquire(task.device, s.key, s.bytes());
      ++r.hits;
      continue;
    }
    const double recompute = static_cast<double>(s.box.cells()) * cal.recomputeCostPerCell / dev.cellRate(cal);
    if (shouldRecompute(recompute, link.transferSeconds(s.bytes()))) {
      cache.recompute(task.device, s.key, s.bytes());
      ++r.recomputed;
    } else {
      cache.acquire(task.device, s.key, s.bytes());
      ++r.misses;
      r.bytesIn += s.bytes();
    }
  }
  for (const BufferKey& k : task.produced) cache.deviceWrite(task.device, k);
  for (const Slice& s : task.outputs) r.bytesOut += s.bytes();

  r.transferIn = r.bytesIn ? link.transferSeconds(r.bytesIn) : 0.0;
  r.compute = computeSeconds(dev, cal, task.cells);
  r.transferOut = r.bytesOut ? link.transferSeconds(r.bytesOut) : 0.0;

  auto wall = std::make_shared<double>(0.0);
  auto job = [work = std::move(task.work), wall] {
    Stopwatch sw;
    if (work) work();
    *wall = sw.seconds();
  };
  std::future<void> done = dev.pool->submit(std::move(job));
  if (mode == OffloadMode::Sync) done.wait();
  return OffloadHandle(std::move(done), r, wall);
}

}  // namespace hcfd::hetero
