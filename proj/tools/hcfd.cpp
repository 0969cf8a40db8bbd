#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hcfd/harness/case.hpp"
#include "hcfd/harness/report.hpp"
#include "hcfd/harness/runner.hpp"
#include "hcfd/hetero/timeline.hpp"
#include "hcfd/util/csv.hpp"

using namespace hcfd;
using namespace hcfd::harness;
namespace fs = std::filesystem;

namespace {

// Overrides shared by the subcommands that run a case.
struct Overrides {
  std::optional<int> ranks, workers, maxIters, bestOf, cores;
  std::optional<std::uint64_t> seed;
  std::optional<double> ratio, cpuThroughput, copThroughput, linkBandwidth, linkLatency, cellRate;
  std::string out;

  void add(CLI::App* app) {
    app->add_option("--ranks", ranks, "Rank count");
    app->add_option("--workers", workers, "Residual worker threads per rank");
    app->add_option("--max-iters", maxIters, "Iteration cap");
    app->add_option("--best-of", bestOf, "Repeat the run and keep the fastest");
    app->add_option("--seed", seed, "Seed of the initial-condition noise");
    app->add_option("--cores", cores, "Host cores shared by in-process ranks");
    app->add_option("--ratio", ratio, "Coprocessor/CPU load ratio");
    app->add_option("--cpu-throughput", cpuThroughput, "CPU device throughput relative to the calibration cell rate");
    app->add_option("--cop-throughput", copThroughput, "Coprocessor throughput relative to the calibration cell rate");
    app->add_option("--link-bandwidth", linkBandwidth, "Host-coprocessor link bandwidth, bytes/s");
    app->add_option("--link-latency", linkLatency, "Host-coprocessor link latency, s");
    app->add_option("--cell-rate", cellRate, "Calibration cell-stage updates per second of one CPU device");
    app->add_option("--out", out, "Output directory");
  }

  void apply(CaseFile& c) const {
    if (ranks) {
      c.run.ranks = *ranks;
      c.topology.nodes = std::min(c.topology.nodes, *ranks);
    }
    if (workers) c.run.workers = *workers;
    if (maxIters) c.time.maxIters = *maxIters;
    if (bestOf) c.run.bestOf = *bestOf;
    if (seed) c.run.seed = *seed;
    if (cores) c.run.cores = *cores;
    if (ratio) {
      c.run.loadRatio = *ratio;
      const int nodes = c.topology.nodes;
      if (c.initial.kind == InitialKind::Corner && c.run.cuts[0].size() == static_cast<std::size_t>(5 * nodes + 1))
        c.run.cuts[0] = cornerCuts(nodes, c.zone.cells[0] / nodes, *ratio);
    }
    if (cpuThroughput) c.devices.cpu.relativeThroughput = *cpuThroughput;
    if (copThroughput) c.devices.coprocessor.relativeThroughput = *copThroughput;
    if (linkBandwidth) c.devices.coprocessor.link->bandwidth = *linkBandwidth;
    if (linkLatency) c.devices.coprocessor.link->latency = *linkLatency;
    if (cellRate) c.devices.calibration.cellRate = *cellRate;
    if (!out.empty()) c.output.dir = out;
    c.validate();
  }
};

std::vector<std::string> splitList(const std::string& s) {
  auto rows = parseCsv(s);
  if (rows.empty()) return {};
  return rows[0];
}

Index3 parseCells(const std::string& s) {
  std::vector<int> v;
  for (const auto& f : splitList(s)) v.push_back(std::stoi(f));
  if (v.size() == 1) return {v[0], v[0], v[0]};
  if (v.size() == 3) return {v[0], v[1], v[2]};
  throw CLI::ValidationError("--cells", "expected N or NX,NY,NZ");
}

// "0.2:1.2:0.1" or "0.5,0.7,0.9".
std::vector<double> parseRatios(const std::string& s) {
  std::vector<double> out;
  if (s.find(':') != std::string::npos) {
    double a, b, step;
    if (std::sscanf(s.c_str(), "%lf:%lf:%lf", &a, &b, &step) != 3 || !(step > 0.0) || b < a)
      throw CLI::ValidationError("--ratios", "expected FIRST:LAST:STEP");
    const int n = static_cast<int>(std::floor((b - a) / step + 1e-9));
    for (int i = 0; i <= n; ++i) out.push_back(std::round((a + i * step) * 1e9) / 1e9);
    return out;
  }
  for (const auto& f : splitList(s)) out.push_back(std::stod(f));
  return out;
}

std::vector<int> parseInts(const std::string& s) {
  std::vector<int> out;
  for (const auto& f : splitList(s)) out.push_back(std::stoi(f));
  return out;
}

void emit(const Table& t, const std::string& dir, const std::string& name) {
  std::cout << t.text();
  if (dir.empty()) return;
  fs::create_directories(dir);
  writeTable(t, (fs::path(dir) / name).string());
  std::cout << "wrote " << (fs::path(dir) / name).string() << "\n";
}

void printWarnings(const RunResult& r) {
  for (const auto& rank : r.ranks)
    for (const auto& w : rank.warnings) std::cerr << "warning: rank " << rank.rank << ": " << w << "\n";
}

// One process per rank over TCP on the loopback; rank 0 stays in this process.
RunResult runSockets(const CaseFile& c, const partition::PartitionPlan& plan) {
  const int ranks = plan.ranks;
  std::vector<exchange::Endpoint> endpoints(static_cast<std::size_t>(ranks));
  std::vector<int> fds(static_cast<std::size_t>(ranks));
  for (int r = 0; r < ranks; ++r)
    fds[static_cast<std::size_t>(r)] = exchange::SocketTransport::listenEphemeral("127.0.0.1", endpoints[static_cast<std::size_t>(r)].port);
  auto halo = std::make_shared<const exchange::HaloPlan>(exchange::buildHaloPlan(plan));
  RunOptions options;
  options.writeOutputs = false;

  std::vector<pid_t> children;
  for (int r = 1; r < ranks; ++r) {
    const pid_t pid = fork();
    if (pid < 0) throw Error("fork failed");
    if (pid == 0) {
      int status = 0;
      try {
        for (int o = 0; o < ranks; ++o)
          if (o != r) ::close(fds[static_cast<std::size_t>(o)]);
        exchange::SocketTransport t(r, endpoints, fds[static_cast<std::size_t>(r)]);
        RankResult res = runRank(c, plan, halo, t, options);
        gatherBlocks(t, plan, res.blocks);
      } catch (const std::exception& e) {
        std::cerr << "rank " << r << ": " << e.what() << "\n";
        status = 1;
      }
      std::fflush(nullptr);
      _exit(status);
    }
    children.push_back(pid);
  }
  for (int o = 1; o < ranks; ++o) ::close(fds[static_cast<std::size_t>(o)]);

  RunResult out;
  out.plan = plan;
  {
    exchange::SocketTransport t(0, endpoints, fds[0]);
    RankResult res = runRank(c, plan, halo, t, options);
    out.field = gatherBlocks(t, plan, res.blocks);
    out.metrics = res.metrics;
    out.modeledTime = res.modeledTime;
    out.modeledSerialized = res.modeledSerialized;
    out.ranks.push_back(std::move(res));
  }
  bool ok = true;
  for (pid_t pid : children) {
    int status = 0;
    waitpid(pid, &status, 0);
    ok = ok && WIFEXITED(status) && WEXITSTATUS(status) == 0;
  }
  if (!ok) throw Error("a rank process failed");
  return out;
}

int reportPath(const std::string& path) {
  if (fs::is_directory(path)) {
    for (const char* name : {"metrics.csv", "sweep.csv", "scaling.csv", "timeline.csv"}) {
      const fs::path p = fs::path(path) / name;
      if (!fs::exists(p)) continue;
      std::cout << "== " << name << "\n";
      reportPath(p.string());
      std::cout << "\n";
    }
    return 0;
  }
  const std::string text = readTextFile(path);
  const Table t = parseTable(text);
  if (!t.columns.empty() && t.columns[0] == "start" && t.columns.size() == 6) {
    const auto rep = hetero::timelineReport(hetero::parseTimelineCsv(text));
    Table s;
    s.columns = {"lane", "compute_s", "transfer_s", "comm_s", "reconcile_s", "idle_s"};
    for (const auto& l : rep.lanes)
      s.rows.push_back({l.lane, formatDouble(l.compute), formatDouble(l.transfer), formatDouble(l.comm),
                        formatDouble(l.reconcile), formatDouble(l.idle)});
    std::cout << s.text() << "wall " << rep.wallTime << " s, communication " << rep.commTime << " s, hidden "
              << rep.hiddenFraction * 100.0 << "%\n";
    return 0;
  }
  std::cout << t.text();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-block compressible-flow mini-solver and benchmark harness"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Write a case file");
  GenOptions g;
  std::string cells, genOut;
  double genRatio = g.loadRatio;
  std::optional<std::uint64_t> genSeed;
  std::optional<int> genIters;
  gen->add_option("--kind", g.kind, "uniform | density-wave | sod | corner")->required();
  gen->add_option("--cells", cells, "N or NX,NY,NZ (verification kinds)");
  gen->add_option("--blocks", g.blocks, "Block count");
  gen->add_option("--ranks", g.ranks, "Rank count");
  gen->add_option("--nodes", g.nodes, "Corner: node count");
  gen->add_option("--cells-per-node", g.cellsPerNode, "Corner: cells per node");
  gen->add_option("--ratio", genRatio, "Corner: coprocessor/CPU load ratio");
  gen->add_option("--seed", genSeed, "Seed of the initial-condition noise");
  gen->add_option("--max-iters", genIters, "Iteration cap");
  gen->add_option("--case", genOut, "Output case path (stdout when absent)");

  // partition
  auto* part = app.add_subcommand("partition", "Split and regroup a case into a plan file");
  std::string partCase, partOut;
  Overrides partOv;
  part->add_option("--case", partCase, "Case file")->required()->check(CLI::ExistingFile);
  part->add_option("--plan", partOut, "Output plan path (stdout when absent)");
  part->add_option("--ranks", partOv.ranks, "Rank count");
  part->add_option("--ratio", partOv.ratio, "Coprocessor/CPU load ratio");

  // run
  auto* run = app.add_subcommand("run", "Run a case and report metrics");
  std::string runCasePath, runPlan, transport = "inproc";
  bool perBlock = false, dump = false, timeline = false;
  Overrides runOv;
  run->add_option("--case", runCasePath, "Case file")->required()->check(CLI::ExistingFile);
  run->add_option("--plan", runPlan, "Plan file (generated when absent)")->check(CLI::ExistingFile);
  run->add_option("--transport", transport, "inproc | socket")->check(CLI::IsMember({"inproc", "socket"}));
  run->add_flag("--dump", dump, "Write the final field to field.dump");
  run->add_flag("--per-block-dump", perBlock, "One dump record per block");
  run->add_flag("--timeline", timeline, "Write rank 0's modeled timeline");
  runOv.add(run);

  // sweep-ratio
  auto* sweep = app.add_subcommand("sweep-ratio", "Sweep the coprocessor/CPU load ratio");
  std::string sweepCase, ratios = "0.2:1.2:0.1";
  SweepOptions so;
  Overrides sweepOv;
  sweep->add_option("--case", sweepCase, "Case file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--ratios", ratios, "FIRST:LAST:STEP or a comma list");
  sweep->add_option("--iterations", so.iterations, "Iterations per point");
  sweepOv.add(sweep);

  // bench
  auto* bench = app.add_subcommand("bench", "Weak, strong or process x thread scaling study");
  std::string benchCase, mode = "weak", rankList = "1,2,4,8", threadList;
  ScalingOptions sco;
  Overrides benchOv;
  bench->add_option("--case", benchCase, "Case file (weak: one rank's share)")->required()->check(CLI::ExistingFile);
  bench->add_option("--mode", mode, "weak | strong | matrix")->check(CLI::IsMember({"weak", "strong", "matrix"}));
  bench->add_option("--rank-list", rankList, "Rank counts, comma separated");
  bench->add_option("--thread-list", threadList, "Matrix mode: threads per rank for each point");
  bench->add_option("--rounds", sco.rounds, "Interleaved passes over all points");
  benchOv.add(bench);

  // report
  auto* rep = app.add_subcommand("report", "Print CSV artifacts as tables");
  std::string repIn;
  rep->add_option("path", repIn, "CSV file or output directory")->required()->check(CLI::ExistingPath);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      if (!cells.empty()) g.cells = parseCells(cells);
      g.loadRatio = genRatio;
      CaseFile c = genCase(g);
      if (genSeed) c.run.seed = *genSeed;
      if (genIters) c.time.maxIters = *genIters;
      if (genOut.empty()) {
        std::cout << caseToText(c);
      } else {
        writeCase(c, genOut);
        std::cout << "wrote " << genOut << "\n";
      }
      return 0;
    }

    if (*part) {
      CaseFile c = readCase(partCase);
      partOv.apply(c);
      const auto plan = makePlan(c);
      if (partOut.empty()) {
        std::cout << partition::planToText(plan);
      } else {
        partition::writePlan(plan, partOut);
        std::cout << "wrote " << partOut << ": " << plan.blocks.size() << " blocks, " << plan.groups.size()
                  << " groups on " << plan.ranks << " ranks\n";
      }
      return 0;
    }

    if (*run) {
      CaseFile c = readCase(runCasePath);
      runOv.apply(c);
      c.output.perBlockDump = c.output.perBlockDump || perBlock;
      c.output.dumpField = c.output.dumpField || dump || perBlock;
      c.output.timeline = c.output.timeline || timeline;
      std::optional<partition::PartitionPlan> plan;
      if (!runPlan.empty()) plan = partition::readPlan(runPlan);
      RunResult r;
      if (transport == "socket") {
        r = runSockets(c, plan ? *plan : makePlan(c));
        if (!c.output.dir.empty()) writeRunOutputs(c, r, c.output.dir);
      } else {
        r = runCase(c, plan);
      }
      printWarnings(r);
      std::cout << metricsTable({{c.name, c, r}}).text();
      if (!c.output.dir.empty()) std::cout << "wrote " << c.output.dir << "\n";
      return 0;
    }

    if (*sweep) {
      CaseFile c = readCase(sweepCase);
      sweepOv.apply(c);
      so.run.devices = {};
      const SweepResult s = sweepLoadRatio(c, parseRatios(ratios), so);
      emit(s.table(), c.output.dir, "sweep.csv");
      std::cout << "argmax ratio " << s.argmax << ", closed-form optimum " << s.closedFormOptimum << "\n";
      return 0;
    }

    if (*bench) {
      CaseFile c = readCase(benchCase);
      benchOv.apply(c);
      if (!threadList.empty()) sco.threads = parseInts(threadList);
      const ScalingResult s = benchScaling(c, parseScalingMode(mode), parseInts(rankList), sco);
      emit(s.table(), c.output.dir, "scaling.csv");
      if (s.mode == ScalingMode::Weak) std::cout << "time variation " << s.timeVariation() * 100.0 << "%\n";
      return 0;
    }

    if (*rep) return reportPath(repIn);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
