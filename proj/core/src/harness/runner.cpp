#include "hcfd/harness/runner.hpp"

#include <algorithm>
#include <exception>
#include <filesystem>
#include <thread>

#include "hcfd/harness/report.hpp"

namespace hcfd::harness {

double RunResult::modeledMcups() const {
  return modeledTime > 0.0 ? mcups(metrics.totalCells, metrics.iterations, modeledTime) : 0.0;
}

double RunResult::rankCpuPerIteration() const {
  // Fastest iteration of each rank keeps host slowdowns out; the slowest rank counts.
  double worst = 0.0;
  for (const auto& r : ranks) {
    const auto& it = r.metrics.iterationCpu;
    if (!it.empty()) worst = std::max(worst, *std::min_element(it.begin(), it.end()));
  }
  return worst;
}

partition::PartitionPlan makePlan(const CaseFile& c) {
  c.validate();
  partition::SplitResult split;
  if (!c.run.cuts[0].empty())
    split = partition::splitZoneByCuts(c.zone, c.run.cuts);
  else if (c.run.blocks > 0)
    split = partition::splitZone(c.zone, c.run.blocks);
  else if (c.run.maxBlockCells > 0)
    split = partition::splitZoneMaxCells(c.zone, c.run.maxBlockCells);
  else
    split = partition::splitZone(c.zone, c.run.ranks);
  return partition::regroupBlocks(c.zone, split, c.run.ranks, c.topology, c.run.loadRatio);
}

RankResult runRank(const CaseFile& c, const partition::PartitionPlan& plan,
                   std::shared_ptr<const exchange::HaloPlan> halo, exchange::Transport& transport,
                   const RunOptions& options) {
  const int rank = transport.rank();
  RankResult out;
  out.rank = rank;
  exchange::RankExchanger exchanger(halo, plan, rank, transport, c.run.exchange);
  exchange::RankReduction reduction(transport);

  integrator::LocalState state;
  for (int id : exchanger.localBlocks()) state.blocks.push_back(initialBlock(c, plan, id, plan.haloWidth));

  auto onStep = [&](const integrator::StepInfo& s) {
    if (rank == 0 && options.onStep) options.onStep(s);
  };

  if (c.collaborative()) {
    auto runtime = hetero::configureDevices(c.topology, c.devices, plan.ranks, rank, options.devices);
    out.warnings = runtime->warnings();
    hetero::CollaborativeOptions co;
    co.overlap = c.run.overlap;
    co.tileSize = c.run.tileSize;
    hetero::CollaborativeStepper stepper(plan, halo, *runtime, exchanger, c.gas, co);
    stepper.warmUp(state.blocks);
    out.work = stepper.stageWork();
    reduction.barrier();
    out.metrics = integrator::iterate(state, c.gas, c.time, reduction,
                                      [&](integrator::LocalState& s, double dt, RunMetrics& m, double& norm) {
                                        stepper.step(s, dt, m, norm, &reduction);
                                        onStep({s.iteration + 1, s.time + dt, dt, norm});
                                      });
    out.timeline = stepper.timeline();
    out.modeledTime = stepper.modeledTime();
    out.modeledSerialized = stepper.modeledSerializedTime();
    out.residency = stepper.residency().counters();
  } else {
    WorkerPool pool(c.run.workers > 1 ? c.run.workers : 0);
    integrator::IterateOptions io;
    io.residual.tileSize = c.run.tileSize;
    io.residual.pool = &pool;
    io.overlap = c.run.overlap;
    io.onStep = onStep;
    reduction.barrier();
    out.metrics = integrator::iterate(state, c.gas, c.time, exchanger, reduction, io);
  }
  out.exchange = exchanger.counters();
  out.blocks = std::move(state.blocks);
  return out;
}

std::vector<BlockField> gatherBlocks(exchange::Transport& transport, const partition::PartitionPlan& plan,
                                     const std::vector<BlockField>& local) {
  constexpr std::uint32_t kGatherId = 0xFFF000;
  const int rank = transport.rank();
  auto interior = [](const BlockField& b) {
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(b.interiorCells()) * kNumVars);
    const auto e = b.extent();
    for (int c = 0; c < kNumVars; ++c)
      for (int k = 0; k < e[2]; ++k)
        for (int j = 0; j < e[1]; ++j)
          for (int i = 0; i < e[0]; ++i) v.push_back(b.at(c, i, j, k));
    return v;
  };
  if (rank != 0) {
    for (const auto& b : local) {
      exchange::Message m;
      m.tag = exchange::makeTag(exchange::kCollectiveEpoch, kGatherId + static_cast<std::uint32_t>(b.id() % 4096));
      m.source = static_cast<std::uint32_t>(rank);
      m.dest = 0;
      m.payload = interior(b);
      transport.send(std::move(m));
    }
    return {};
  }
  std::vector<BlockField> all(plan.blocks.size());
  for (const auto& b : local) all[static_cast<std::size_t>(b.id())] = b;
  for (const auto& blk : plan.blocks) {
    const int owner = plan.rankOf(blk.id);
    if (owner == 0) continue;
    const auto m = transport.recv(owner, exchange::makeTag(exchange::kCollectiveEpoch,
                                                          kGatherId + static_cast<std::uint32_t>(blk.id % 4096)));
    BlockField f(blk.id, blk.box.extents(), plan.haloWidth, blockGeometry(plan, blk.id));
    const auto e = f.extent();
    if (m.payload.size() != static_cast<std::size_t>(f.interiorCells()) * kNumVars)
      throw exchange::TransportError("gathered block " + std::to_string(blk.id) + " has the wrong size", m.tag);
    std::size_t p = 0;
    for (int c = 0; c < kNumVars; ++c)
      for (int k = 0; k < e[2]; ++k)
        for (int j = 0; j < e[1]; ++j)
          for (int i = 0; i < e[0]; ++i) f.at(c, i, j, k) = m.payload[p++];
    all[static_cast<std::size_t>(blk.id)] = std::move(f);
  }
  return all;
}

namespace {

RunResult runOnce(const CaseFile& c, const partition::PartitionPlan& plan,
                  const std::shared_ptr<const exchange::HaloPlan>& halo, const RunOptions& options) {
  const int ranks = plan.ranks;
  const int cores = c.run.cores > 0 ? c.run.cores : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  exchange::InProcessNetwork net(ranks, c.run.network, cores);
  std::vector<RankResult> results(static_cast<std::size_t>(ranks));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(ranks));
  auto body = [&](int r) {
    exchange::CoreLease lease(net.cores());
    try {
      exchange::InProcessTransport t(net, r);
      results[static_cast<std::size_t>(r)] = runRank(c, plan, halo, t, options);
    } catch (...) {
      errors[static_cast<std::size_t>(r)] = std::current_exception();
      // Wake ranks blocked on this one.
      for (int o = 0; o < ranks; ++o) net.mailbox(o).fail("rank " + std::to_string(r) + " failed");
    }
  };
  if (ranks == 1) {
    body(0);
  } else {
    std::vector<std::thread> threads;
    for (int r = 0; r < ranks; ++r) threads.emplace_back(body, r);
    for (auto& t : threads) t.join();
  }
  // Report the root cause rather than the transport failures it triggered.
  std::exception_ptr first;
  for (const auto& e : errors) {
    if (!e) continue;
    try {
      std::rethrow_exception(e);
    } catch (const exchange::TransportError&) {
      if (!first) first = e;
    } catch (...) {
      std::rethrow_exception(e);
    }
  }
  if (first) std::rethrow_exception(first);

  RunResult out;
  out.plan = plan;
  RunMetrics& m = out.metrics;
  m = results[0].metrics;
  m.wallTime = 0.0;
  m.cpuTime = 0.0;
  m.compTime = 0.0;
  m.commTime = 0.0;
  m.phases.clear();
  for (const auto& r : results) {
    m.wallTime = std::max(m.wallTime, r.metrics.wallTime);
    m.cpuTime += r.metrics.cpuTime;
    m.compTime += r.metrics.compTime;
    m.commTime += r.metrics.commTime;
    for (const auto& [k, v] : r.metrics.phases) m.phases[k] += v;
  }
  out.modeledTime = results[0].modeledTime;
  out.modeledSerialized = results[0].modeledSerialized;
  if (options.keepField) {
    out.field.resize(plan.blocks.size());
    for (auto& r : results)
      for (auto& b : r.blocks) out.field[static_cast<std::size_t>(b.id())] = std::move(b);
  }
  for (auto& r : results) r.blocks.clear();
  out.ranks = std::move(results);
  return out;
}

}  // namespace

RunResult runCase(const CaseFile& c, const std::optional<partition::PartitionPlan>& plan, const RunOptions& options) {
  c.validate();
  const partition::PartitionPlan p = plan ? *plan : makePlan(c);
  p.validate();
  if (p.ranks != c.run.ranks)
    throw CaseError("plan has " + std::to_string(p.ranks) + " ranks, case asks for " + std::to_string(c.run.ranks));
  auto halo = std::make_shared<const exchange::HaloPlan>(exchange::buildHaloPlan(p));

  RunResult best;
  std::vector<double> trials;
  for (int t = 0; t < c.run.bestOf; ++t) {
    RunResult r = runOnce(c, p, halo, options);
    trials.push_back(r.metrics.wallTime);
    if (t == 0 || r.metrics.wallTime < best.metrics.wallTime) best = std::move(r);
  }
  best.trialWallTimes = std::move(trials);
  if (options.writeOutputs && !c.output.dir.empty()) writeRunOutputs(c, best, c.output.dir);
  return best;
}

void writeRunOutputs(const CaseFile& c, const RunResult& r, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir + ": " + ec.message());
  writeTable(metricsTable({{c.name, c, r}}), dir + "/metrics.csv");
  if (c.output.dumpField && !r.field.empty()) writeDump(r.dump(c.output.perBlockDump), dir + "/field.dump");
  if (c.output.timeline && c.collaborative()) hetero::writeTimelineCsv(r.ranks[0].timeline, dir + "/timeline.csv");
}

}  // namespace hcfd::harness
