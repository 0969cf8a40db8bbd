#include "hcfd/hetero/collaborative.hpp"

#include <algorithm>
#include <cmath>

namespace hcfd::hetero {

using integrator::Region;

namespace {

std::uint64_t stateBytes(const IndexBox& box) {
  return static_cast<std::uint64_t>(box.cells()) * kNumVars * sizeof(double);
}

double networkSeconds(const exchange::NetworkModel& net, std::int64_t messages, std::uint64_t bytes) {
  if (messages == 0) return 0.0;
  return static_cast<double>(messages) * net.latency +
         (net.bandwidth > 0.0 ? static_cast<double>(bytes) / net.bandwidth : 0.0);
}

}  // namespace

Timeline modelStage(const StageWork& work, const Calibration& calibration, bool overlap, int stage) {
  Timeline t;
  for (const auto& d : work.devices) t.addLane(d.lane);
  const double net = networkSeconds(calibration.network, work.netMessages, work.netBytes);
  if (net > 0.0) t.add({0.0, net, "net", Phase::Comm, stage, "halo"});

  auto transfer = [&](const DeviceWork& d, std::uint64_t bytes) {
    return bytes && d.link ? d.link->transferSeconds(bytes) : 0.0;
  };
  auto runCoprocessor = [&](const DeviceWork& d, double start) {
    double s = start;
    const double in = transfer(d, d.bytesIn);
    if (in > 0.0) t.add({s, s + in, d.lane, Phase::Transfer, stage, "in"});
    s += in;
    const double c = static_cast<double>(d.cells) / d.rate;
    if (c > 0.0) t.add({s, s + c, d.lane, Phase::Compute, stage, "kernels"});
    s += c;
    const double out = transfer(d, d.bytesOut);
    if (out > 0.0) t.add({s, s + out, d.lane, Phase::Transfer, stage, "out"});
    return s + out;
  };

  double end = 0.0;
  if (overlap) {
    end = net;
    for (const auto& d : work.devices) {
      if (d.deviceClass == DeviceClass::Coprocessor) {
        end = std::max(end, runCoprocessor(d, d.waitsForNetwork ? net : 0.0));
        continue;
      }
      const double pre = static_cast<double>(d.cells - d.remoteShellCells) / d.rate;
      const double post = static_cast<double>(d.remoteShellCells) / d.rate;
      if (pre > 0.0) t.add({0.0, pre, d.lane, Phase::Compute, stage, "local"});
      const double s = d.remoteShellCells > 0 ? std::max(pre, net) : pre;
      if (post > 0.0) t.add({s, s + post, d.lane, Phase::Compute, stage, "boundary"});
      end = std::max(end, s + post);
    }
  } else {
    double cpuEnd = net;
    for (const auto& d : work.devices) {
      if (d.deviceClass != DeviceClass::Cpu) continue;
      const double c = static_cast<double>(d.cells) / d.rate;
      if (c > 0.0) t.add({net, net + c, d.lane, Phase::Compute, stage, "all"});
      cpuEnd = std::max(cpuEnd, net + c);
    }
    end = cpuEnd;
    for (const auto& d : work.devices)
      if (d.deviceClass == DeviceClass::Coprocessor) end = runCoprocessor(d, end);
  }

  const double rec = static_cast<double>(work.reconcileBytes) / calibration.hostCopyBandwidth;
  if (rec > 0.0 && !work.devices.empty()) t.add({end, end + rec, work.devices.front().lane, Phase::Reconcile, stage, "ghosts"});
  t.wallTime = std::max(t.wallTime, end + rec);
  t.fillIdle();
  return t;
}

CollaborativeStepper::CollaborativeStepper(const partition::PartitionPlan& plan,
                                           std::shared_ptr<const exchange::HaloPlan> halo, Runtime& runtime,
                                           exchange::RankExchanger& exchanger, GasModel gas,
                                           CollaborativeOptions options)
    : plan_(plan),
      halo_(std::move(halo)),
      runtime_(runtime),
      exchanger_(exchanger),
      gas_(gas),
      options_(options),
      cache_(static_cast<int>(runtime.devices().size())) {
  const auto& local = exchanger_.localBlocks();
  const std::size_t nd = runtime_.devices().size();
  deviceBlocks_.assign(nd, {});
  ghostIn_.assign(nd, {});
  sliceOut_.assign(nd, {});
  constantIn_.assign(nd, {});
  for (std::size_t l = 0; l < local.size(); ++l) {
    const auto& g = plan_.groupOf(local[l]);
    const int d = runtime_.find(g.deviceClass, g.deviceIndex);
    if (d < 0)
      throw ConfigError("block " + std::to_string(local[l]) + " is planned on " +
                        partition::deviceClassName(g.deviceClass) + " " + std::to_string(g.deviceIndex) +
                        " which rank " + std::to_string(runtime_.rank()) + " does not have");
    deviceOfLocal_.push_back(d);
    deviceBlocks_[static_cast<std::size_t>(d)].push_back(static_cast<int>(l));
  }
  for (std::size_t d = 0; d < nd; ++d) {
    integrator::ResidualOptions ro;
    ro.tileSize = options_.tileSize;
    ro.pool = runtime_.devices()[d].pool.get();
    engines_.push_back(std::make_unique<integrator::ResidualEngine>(gas_, ro));
  }

  const int rank = runtime_.rank();
  for (std::size_t ti = 0; ti < halo_->transfers.size(); ++ti) {
    const auto& t = halo_->transfers[ti];
    if (plan_.rankOf(t.dstBlock) != rank) continue;
    const int dstDev = deviceOfLocal_[static_cast<std::size_t>(exchanger_.localIndex(t.dstBlock))];
    const bool dstCop = runtime_.devices()[static_cast<std::size_t>(dstDev)].slot.deviceClass == DeviceClass::Coprocessor;
    const int slice = static_cast<int>(ti);
    if (t.srcBlock < 0) {
      if (dstCop)
        for (int c = 0; c < kNumVars; ++c) constantIn_[static_cast<std::size_t>(dstDev)].push_back({{t.dstBlock, c, slice}, t.dstBox});
      continue;
    }
    const bool remote = plan_.rankOf(t.srcBlock) != rank;
    const int srcDev = remote ? -1 : deviceOfLocal_[static_cast<std::size_t>(exchanger_.localIndex(t.srcBlock))];
    if (srcDev == dstDev) continue;
    for (int c = 0; c < kNumVars; ++c) {
      const Slice s{{t.srcBlock, c, slice}, t.dstBox};
      if (dstCop) ghostIn_[static_cast<std::size_t>(dstDev)].push_back(s);
      if (srcDev >= 0) sliceOut_[static_cast<std::size_t>(srcDev)].push_back(s);
    }
  }
}

void CollaborativeStepper::warmUp(const std::vector<BlockField>& blocks) {
  memory_.clear();
  const auto& devs = runtime_.devices();
  for (std::size_t d = 0; d < devs.size(); ++d) {
    engines_[d]->prepare(blocks, residual_, &deviceBlocks_[d]);
    if (devs[d].slot.deviceClass != DeviceClass::Coprocessor) continue;
    DeviceMemory mem(static_cast<int>(d), devs[d].model.memoryBytes);
    const int scratch = (gas_.viscous ? 6 : 3) + 2;  // directional slots, residual, Q^n
    for (int l : deviceBlocks_[d]) {
      const auto& b = blocks[static_cast<std::size_t>(l)];
      mem.reserve(stateBytes(b.allocated()));
      mem.reserve(static_cast<std::uint64_t>(scratch) * stateBytes(b.interior()));
      if (gas_.viscous) mem.reserve(stateBytes(b.allocated()) * 6 / 5);
      for (int c = 0; c < kNumVars; ++c) cache_.acquire(static_cast<int>(d), {b.id(), c, -1}, 0);
      cache_.acquire(static_cast<int>(d), {b.id(), BufferKey::kGeometry, 0}, 0);
    }
    for (const Slice& s : constantIn_[d]) cache_.acquire(static_cast<int>(d), s.key, s.bytes());
    memory_.push_back(mem);
  }
  cache_.resetCounters();
  warm_ = true;
}

StageWork CollaborativeStepper::stageWork() const {
  StageWork w;
  const auto& devs = runtime_.devices();
  const auto& local = exchanger_.localBlocks();
  const int halo = plan_.haloWidth;
  for (std::size_t d = 0; d < devs.size(); ++d) {
    DeviceWork dw;
    dw.lane = devs[d].name();
    dw.deviceClass = devs[d].slot.deviceClass;
    dw.rate = devs[d].cellRate(runtime_.calibration());
    dw.link = devs[d].model.link;
    for (int l : deviceBlocks_[d]) {
      const int g = local[static_cast<std::size_t>(l)];
      const IndexBox box = plan_.blocks[static_cast<std::size_t>(g)].box;
      dw.cells += box.cells();
      bool remote = false;
      for (int n : plan_.neighbors(g)) remote = remote || plan_.rankOf(n) != runtime_.rank();
      if (remote) {
        std::int64_t interior = 0;
        for (const auto& b : integrator::regionBoxes(box.extents(), halo, Region::Interior)) interior += b.cells();
        dw.remoteShellCells += box.cells() - interior;
        if (dw.deviceClass == DeviceClass::Coprocessor) dw.waitsForNetwork = true;
      }
    }
    if (dw.deviceClass == DeviceClass::Coprocessor) {
      for (const Slice& s : ghostIn_[d]) dw.bytesIn += s.bytes();
      for (const Slice& s : sliceOut_[d]) dw.bytesOut += s.bytes();
    }
    w.devices.push_back(dw);
  }
  const auto traffic = exchange::epochTraffic(*halo_, runtime_.rank(), exchanger_.options());
  w.netMessages = traffic.messages;
  w.netBytes = static_cast<std::uint64_t>(traffic.bytes);
  for (const auto& t : halo_->transfers) {
    if (t.srcBlock < 0 || plan_.rankOf(t.dstBlock) != runtime_.rank() || plan_.rankOf(t.srcBlock) != runtime_.rank())
      continue;
    if (deviceOfLocal_[static_cast<std::size_t>(exchanger_.localIndex(t.srcBlock))] !=
        deviceOfLocal_[static_cast<std::size_t>(exchanger_.localIndex(t.dstBlock))])
      w.reconcileBytes += stateBytes(t.dstBox);
  }
  return w;
}

void CollaborativeStepper::runDevice(int device, int stage, std::vector<BlockField>& blocks,
                                     const std::vector<InteriorArray>& base, double dt) {
  const auto* subset = &deviceBlocks_[static_cast<std::size_t>(device)];
  engines_[static_cast<std::size_t>(device)]->compute(blocks, residual_, Region::All, subset);
  integrator::applyStage(stage, blocks, base, residual_, dt, subset);
}

OffloadTask CollaborativeStepper::makeTask(int device, int stage, std::vector<BlockField>& blocks,
                                           std::vector<InteriorArray>& base, double dt) {
  const auto d = static_cast<std::size_t>(device);
  OffloadTask task;
  task.device = device;
  task.kernels = {KernelKind::InvFlux};
  if (gas_.viscous) task.kernels.push_back(KernelKind::VisFlux);
  task.kernels.push_back(KernelKind::Update);
  task.inputs = ghostIn_[d];
  for (const Slice& s : constantIn_[d]) task.inputs.push_back(s);
  for (int l : deviceBlocks_[d]) {
    const auto& b = blocks[static_cast<std::size_t>(l)];
    task.group = plan_.groupOfBlock[static_cast<std::size_t>(b.id())];
    task.cells += b.interiorCells();
    for (int c = 0; c < kNumVars; ++c) {
      task.inputs.push_back({{b.id(), c, -1}, b.interior()});
      task.produced.push_back({b.id(), c, -1});
    }
    task.inputs.push_back({{b.id(), BufferKey::kGeometry, 0}, b.interior()});
  }
  if (gas_.viscous)
    for (const Slice& s : ghostIn_[d])
      if (s.key.component == 0) task.induced.push_back({{s.key.block, BufferKey::kPrimitives, s.key.slice}, s.box});
  task.outputs = sliceOut_[d];
  for (const Slice& s : sliceOut_[d]) task.produced.push_back(s.key);
  task.work = [this, device, stage, &blocks, &base, dt] { runDevice(device, stage, blocks, base, dt); };
  return task;
}

void CollaborativeStepper::step(integrator::LocalState& state, double dt, RunMetrics& m, double& norm,
                                integrator::Reduction* reduction) {
  if (!(dt > 0.0)) throw Error("time step must be positive");
  auto& blocks = state.blocks;
  if (!warm_) warmUp(blocks);
  integrator::saveInteriors(blocks, base_);
  const auto& devs = runtime_.devices();
  const StageWork steady = stageWork();

  for (int stage = 0; stage < 3; ++stage) {
    try {
      const double exchangeTime = exchanger_.exchange(blocks, {});
      // Ghosts received from other ranks are new host data.
      for (std::size_t d = 0; d < devs.size(); ++d)
        for (const Slice& s : ghostIn_[d])
          if (plan_.rankOf(s.key.block) != runtime_.rank()) cache_.hostWrite(s.key);

      Stopwatch work;
      std::vector<OffloadHandle> handles;
      std::vector<int> handleDevice;
      const OffloadMode mode = options_.overlap ? options_.mode : OffloadMode::Sync;
      for (std::size_t d = 0; d < devs.size(); ++d) {
        if (devs[d].slot.deviceClass != DeviceClass::Coprocessor || deviceBlocks_[d].empty()) continue;
        handles.push_back(offloadGroup(runtime_, cache_, makeTask(static_cast<int>(d), stage, blocks, base_, dt), mode));
        handleDevice.push_back(static_cast<int>(d));
      }
      std::vector<OffloadResult> results;
      try {
        for (std::size_t d = 0; d < devs.size(); ++d) {
          if (devs[d].slot.deviceClass != DeviceClass::Cpu || deviceBlocks_[d].empty()) continue;
          runDevice(static_cast<int>(d), stage, blocks, base_, dt);
          for (const Slice& s : sliceOut_[d]) cache_.hostWrite(s.key);
        }
      } catch (...) {
        for (auto& h : handles) {
          try {
            if (h.valid()) h.wait(options_.epochTimeout);
          } catch (...) {
          }
        }
        throw;
      }
      for (auto& h : handles) results.push_back(h.wait(options_.epochTimeout));
      const double workTime = work.seconds();

      if (stage == 0) {
        const double local = integrator::residualSumSquares(residual_);
        norm = std::sqrt(reduction ? reduction->sum(local) : local);
      }

      StageWork w = steady;
      for (std::size_t i = 0; i < results.size(); ++i) {
        auto& dw = w.devices[static_cast<std::size_t>(handleDevice[i])];
        dw.bytesIn = results[i].bytesIn;
        dw.bytesOut = results[i].bytesOut;
      }
      const Timeline t = modelStage(w, runtime_.calibration(), options_.overlap, stage);
      const Timeline serial = modelStage(w, runtime_.calibration(), false, stage);
      modeledTime_ += reduction ? reduction->max(t.wallTime) : t.wallTime;
      modeledSerialized_ += reduction ? reduction->max(serial.wallTime) : serial.wallTime;
      if (options_.recordTimeline) timeline_.append(t);

      m.commTime += exchangeTime;
      m.compTime += workTime;
      m.phases["exchange"] += exchangeTime;
      m.phases["devices"] += workTime;
    } catch (const InvalidStateError& e) {
      StateLocation where;
      where.stage = stage;
      throw e.withContext(where);
    }
  }
}

void collaborativeStep(CollaborativeStepper& stepper, integrator::LocalState& state, double dt, RunMetrics& metrics,
                       double& norm, integrator::Reduction* reduction) {
  stepper.step(state, dt, metrics, norm, reduction);
}

}  // namespace hcfd::hetero
