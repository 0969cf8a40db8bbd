#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "hcfd/exchange/halo.hpp"
#include "hcfd/harness/case.hpp"
#include "hcfd/harness/runner.hpp"
#include "hcfd/hetero/collaborative.hpp"
#include "hcfd/hetero/offload.hpp"
#include "hcfd/hetero/timeline.hpp"

using namespace hcfd;

namespace {

// Density-wave blocks with filled ghosts, exchanged once on a single rank.
struct Fixture {
  harness::CaseFile c;
  partition::PartitionPlan plan;
  std::shared_ptr<const exchange::HaloPlan> halo;
  std::vector<BlockField> blocks;

  Fixture(int n, int nblocks, bool viscous = false) {
    harness::GenOptions g;
    g.kind = "density-wave";
    g.cells = {n, n, n};
    g.blocks = nblocks;
    c = harness::genCase(g);
    c.gas.viscous = viscous;
    plan = harness::makePlan(c);
    halo = std::make_shared<const exchange::HaloPlan>(exchange::buildHaloPlan(plan));
    for (const auto& b : plan.blocks) blocks.push_back(harness::initialBlock(c, plan, b.id, plan.haloWidth));
    exchange::InProcessNetwork net(1);
    exchange::InProcessTransport t(net, 0);
    exchange::RankExchanger ex(halo, plan, 0, t);
    ex.exchange(blocks, {});
  }
};

void BM_SweepTile(benchmark::State& state) {
  const auto axis = static_cast<Axis>(state.range(0));
  const auto kind = state.range(1) ? scheme::FluxKind::Viscous : scheme::FluxKind::Inviscid;
  Fixture f(32, 1, true);
  const BlockField& q = f.blocks[0];
  scheme::PrimitiveCache prims;
  prims.compute(q, f.c.gas);
  InteriorArray out(q.extent());
  for (auto _ : state) {
    scheme::sweepTile(q, f.c.gas, axis, kind, q.interior(), out, &prims);
    benchmark::DoNotOptimize(out.raw().data());
  }
  state.SetItemsProcessed(state.iterations() * q.interiorCells());
}
BENCHMARK(BM_SweepTile)->ArgsProduct({{0, 1, 2}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_ResidualTileSize(benchmark::State& state) {
  Fixture f(32, 1);
  integrator::ResidualOptions o;
  o.tileSize = static_cast<int>(state.range(0));
  integrator::ResidualEngine engine(f.c.gas, o);
  integrator::ResidualField r;
  for (auto _ : state) {
    engine.compute(f.blocks, r);
    benchmark::DoNotOptimize(r.blocks[0].raw().data());
  }
  state.SetItemsProcessed(state.iterations() * f.plan.totalCells());
}
BENCHMARK(BM_ResidualTileSize)->Arg(4)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_ResidualWorkers(benchmark::State& state) {
  Fixture f(32, 8);
  const int workers = static_cast<int>(state.range(0));
  WorkerPool pool(workers > 1 ? workers : 0);
  integrator::ResidualOptions o;
  o.pool = &pool;
  integrator::ResidualEngine engine(f.c.gas, o);
  integrator::ResidualField r;
  for (auto _ : state) {
    engine.compute(f.blocks, r);
    benchmark::DoNotOptimize(r.blocks[0].raw().data());
  }
  state.SetItemsProcessed(state.iterations() * f.plan.totalCells());
}
BENCHMARK(BM_ResidualWorkers)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_PackUnpack(benchmark::State& state) {
  Fixture f(32, 2);
  const auto& transfers = f.halo->transfers;
  std::vector<double> buf;
  std::int64_t cells = 0;
  for (auto _ : state) {
    cells = 0;
    for (const auto& t : transfers) {
      if (t.srcBlock < 0) continue;
      buf.clear();
      exchange::packTransfer(t, f.blocks[static_cast<std::size_t>(t.srcBlock)], buf);
      exchange::unpackTransfer(t, buf.data(), f.blocks[static_cast<std::size_t>(t.dstBlock)]);
      cells += t.cells();
    }
  }
  state.SetBytesProcessed(state.iterations() * cells * kNumVars * static_cast<std::int64_t>(sizeof(double)));
}
BENCHMARK(BM_PackUnpack)->Unit(benchmark::kMicrosecond);

void BM_ExchangeLocal(benchmark::State& state) {
  Fixture f(32, static_cast<int>(state.range(0)));
  exchange::InProcessNetwork net(1);
  exchange::InProcessTransport t(net, 0);
  exchange::RankExchanger ex(f.halo, f.plan, 0, t);
  for (auto _ : state) ex.exchange(f.blocks, {});
  state.counters["copies/epoch"] =
      static_cast<double>(ex.counters().localCopies) / static_cast<double>(ex.counters().epochs);
}
BENCHMARK(BM_ExchangeLocal)->Arg(1)->Arg(8)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_OffloadSync(benchmark::State& state) {
  partition::NodeTopology topo;
  topo.coprocessorDevices = 1;
  hetero::ConfigureOptions co;
  co.spawnThreads = false;
  auto runtime = hetero::configureDevices(topo, hetero::DeviceModels::defaults(), 1, 0, co);
  const int dev = runtime->find(partition::DeviceClass::Coprocessor, 0);
  hetero::ResidencyCache cache(static_cast<int>(runtime->devices().size()));
  const int slices = static_cast<int>(state.range(0));
  int stage = 0;
  for (auto _ : state) {
    hetero::OffloadTask task;
    task.device = dev;
    task.kernels = {hetero::KernelKind::InvFlux, hetero::KernelKind::Update};
    task.cells = 4096;
    for (int s = 0; s < slices; ++s) {
      const hetero::BufferKey k{0, s % kNumVars, s};
      if (stage % 2 == 0) cache.hostWrite(k);
      task.inputs.push_back({k, {{0, 0, 0}, {16, 16, 5}}});
    }
    task.work = [] {};
    auto h = hetero::offloadGroup(*runtime, cache, std::move(task), hetero::OffloadMode::Sync);
    benchmark::DoNotOptimize(h.wait());
    ++stage;
  }
}
BENCHMARK(BM_OffloadSync)->Arg(6)->Arg(60);

hetero::StageWork cornerWork() {
  hetero::StageWork w;
  for (int c = 0; c < 2; ++c) {
    hetero::DeviceWork d;
    d.lane = "cpu" + std::to_string(c);
    d.rate = 2.0e6;
    d.cells = 4096;
    d.remoteShellCells = 1280;
    w.devices.push_back(d);
  }
  for (int p = 0; p < 3; ++p) {
    hetero::DeviceWork d;
    d.lane = "cop" + std::to_string(p);
    d.deviceClass = partition::DeviceClass::Coprocessor;
    d.rate = 2.6e6;
    d.cells = 2867;
    d.link = hetero::LinkModel{2.0e8, 1.0e-5};
    d.bytesIn = 400000;
    d.bytesOut = 100000;
    w.devices.push_back(d);
  }
  w.netMessages = 2;
  w.netBytes = 512000;
  w.reconcileBytes = 200000;
  return w;
}

void BM_ModelStage(benchmark::State& state) {
  const auto work = cornerWork();
  hetero::Calibration cal;
  const bool overlap = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(hetero::modelStage(work, cal, overlap));
}
BENCHMARK(BM_ModelStage)->Arg(0)->Arg(1);

void BM_TimelineReport(benchmark::State& state) {
  const auto work = cornerWork();
  hetero::Calibration cal;
  hetero::Timeline t;
  for (int s = 0; s < state.range(0); ++s) t.append(hetero::modelStage(work, cal, true, s % 3));
  t.fillIdle();
  for (auto _ : state) benchmark::DoNotOptimize(hetero::timelineReport(t));
  state.counters["intervals"] = static_cast<double>(t.intervals.size());
}
BENCHMARK(BM_TimelineReport)->Arg(3)->Arg(150);

}  // namespace

BENCHMARK_MAIN();
