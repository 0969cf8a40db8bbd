#include "hcfd/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hcfd/util/csv.hpp"

namespace hcfd::harness {

std::string Table::csv() const {
  std::string out = csvLine(columns);
  for (const auto& r : rows) out += csvLine(r);
  return out;
}

std::string Table::text() const {
  std::vector<std::size_t> width(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) width[c] = columns[c].size();
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size() && c < width.size(); ++c) width[c] = std::max(width[c], r[c].size());
  std::ostringstream o;
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      o << r[c];
      if (c + 1 < r.size()) o << std::string(width[c] - r[c].size() + 2, ' ');
    }
    o << '\n';
  };
  line(columns);
  for (const auto& r : rows) line(r);
  return o.str();
}

std::size_t Table::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw Error("table has no column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

double Table::number(std::size_t row, const std::string& col) const {
  return std::stod(rows.at(row).at(column(col)));
}

Table parseTable(const std::string& text) {
  auto rows = parseCsv(text);
  if (rows.empty()) throw Error("csv table: missing header");
  Table t;
  t.columns = std::move(rows[0]);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != t.columns.size())
      throw Error("csv table: row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) + " fields, expected " +
                  std::to_string(t.columns.size()));
    t.rows.push_back(std::move(rows[i]));
  }
  return t;
}

void writeTable(const Table& t, const std::string& path) { writeTextFile(path, t.csv()); }
Table readTable(const std::string& path) { return parseTable(readTextFile(path)); }

Table metricsTable(const std::vector<NamedRun>& runs) {
  Table t;
  t.columns = {"label",   "kind",   "ranks",           "cells",     "iterations",    "wall_s",
               "mcups",   "comp_s", "comm_s",          "comp_comm_ratio", "modeled_s", "modeled_mcups",
               "converged", "initial_residual", "final_residual"};
  for (const auto& r : runs) {
    const auto& m = r.result.metrics;
    t.rows.push_back({r.label, initialName(r.config.initial.kind), std::to_string(r.result.plan.ranks),
                      std::to_string(m.totalCells), std::to_string(m.iterations), formatDouble(m.wallTime),
                      formatDouble(m.mcups()), formatDouble(m.compTime), formatDouble(m.commTime),
                      formatDouble(m.compCommRatio()), formatDouble(r.result.modeledTime),
                      formatDouble(r.result.modeledMcups()), m.converged ? "true" : "false",
                      formatDouble(m.initialResidual), formatDouble(m.finalResidual)});
  }
  return t;
}

double closedFormOptimum(double nodeCells, int cpus, int coprocessors, double cpuRate, double coprocessorRate,
                         double transferSeconds) {
  const double num = nodeCells / cpuRate - transferSeconds * cpus;
  const double den = nodeCells / coprocessorRate + transferSeconds * coprocessors;
  return den > 0.0 ? num / den : 0.0;
}

namespace {

bool cornerLayout(const CaseFile& c) {
  const int nodes = c.topology.nodes;
  return c.topology.coprocessorDevices > 0 && c.run.cuts[0].size() == static_cast<std::size_t>(5 * nodes + 1) && c.zone.cells[0] % nodes == 0 &&
         c.run.ranks == nodes;
}

double realizedRatio(const partition::PartitionPlan& plan) {
  double cpu = 0.0, cop = 0.0;
  int ncpu = 0, ncop = 0;
  for (const auto& g : plan.groups) {
    std::int64_t cells = 0;
    for (int b : g.blocks) cells += plan.blocks[static_cast<std::size_t>(b)].box.cells();
    if (g.deviceClass == partition::DeviceClass::Cpu) {
      cpu += static_cast<double>(cells);
      ++ncpu;
    } else {
      cop += static_cast<double>(cells);
      ++ncop;
    }
  }
  if (ncpu == 0 || ncop == 0 || cpu == 0.0) return 0.0;
  return (cop / ncop) / (cpu / ncpu);
}

}  // namespace

Table SweepResult::table() const {
  Table t;
  t.columns = {"ratio", "realized_ratio", "modeled_s", "serialized_s", "modeled_mcups", "hidden_fraction",
               "wall_s", "wall_mcups", "transfer_s", "argmax"};
  for (const auto& p : points)
    t.rows.push_back({formatDouble(p.ratio), formatDouble(p.realizedRatio), formatDouble(p.modeledTime),
                      formatDouble(p.modeledSerialized), formatDouble(p.modeledMcups), formatDouble(p.hiddenFraction),
                      formatDouble(p.wallTime), formatDouble(p.wallMcups), formatDouble(p.transferSeconds),
                      p.ratio == argmax ? "1" : "0"});
  return t;
}

SweepResult sweepLoadRatio(const CaseFile& c, const std::vector<double>& ratios, const SweepOptions& options) {
  SweepResult out;
  RunOptions ro = options.run;
  ro.writeOutputs = false;
  ro.keepField = false;
  double best = -1.0;
  for (double r : ratios) {
    CaseFile k = c;
    k.run.loadRatio = r;
    k.run.schedule = Schedule::Collaborative;
    k.run.bestOf = 1;
    k.time.maxIters = options.iterations;
    k.time.convergenceTol = 0.0;
    k.output.dir.clear();
    if (cornerLayout(c)) k.run.cuts[0] = cornerCuts(c.topology.nodes, c.zone.cells[0] / c.topology.nodes, r);
    const RunResult res = runCase(k, std::nullopt, ro);

    SweepPoint p;
    p.ratio = r;
    p.realizedRatio = realizedRatio(res.plan);
    p.modeledTime = res.modeledTime;
    p.modeledSerialized = res.modeledSerialized;
    p.modeledMcups = res.modeledMcups();
    p.hiddenFraction = hetero::timelineReport(res.ranks[0].timeline).hiddenFraction;
    p.wallTime = res.metrics.wallTime;
    p.wallMcups = res.metrics.mcups();
    for (const auto& d : res.ranks[0].work.devices) {
      if (d.deviceClass != partition::DeviceClass::Coprocessor || !d.link) continue;
      p.transferSeconds = (d.bytesIn ? d.link->transferSeconds(d.bytesIn) : 0.0) +
                          (d.bytesOut ? d.link->transferSeconds(d.bytesOut) : 0.0);
      break;
    }
    if (p.modeledMcups > best) {
      best = p.modeledMcups;
      out.argmax = r;
    }
    out.points.push_back(p);
  }
  if (c.topology.coprocessorDevices > 0 && !out.points.empty()) {
    const double rate = c.devices.calibration.cellRate;
    out.closedFormOptimum = closedFormOptimum(
        static_cast<double>(c.zone.totalCells()) / c.topology.nodes, c.topology.cpuDevices, c.topology.coprocessorDevices,
        rate * c.devices.cpu.relativeThroughput, rate * c.devices.coprocessor.relativeThroughput,
        out.points.front().transferSeconds);
  }
  return out;
}

ScalingMode parseScalingMode(const std::string& s) {
  if (s == "weak") return ScalingMode::Weak;
  if (s == "strong") return ScalingMode::Strong;
  if (s == "matrix") return ScalingMode::Matrix;
  throw Error("unknown scaling mode '" + s + "' (weak, strong, matrix)");
}

const char* scalingModeName(ScalingMode m) {
  switch (m) {
    case ScalingMode::Weak: return "weak";
    case ScalingMode::Strong: return "strong";
    case ScalingMode::Matrix: return "matrix";
  }
  return "?";
}

double ScalingResult::timeVariation() const {
  if (points.empty()) return 0.0;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& p : points) {
    lo = std::min(lo, p.rankTimePerIteration);
    hi = std::max(hi, p.rankTimePerIteration);
  }
  return lo > 0.0 ? (hi - lo) / lo : 0.0;
}

Table ScalingResult::table() const {
  Table t;
  t.columns = {"mode", "ranks", "threads", "cells", "iterations", "wall_s", "wall_per_iter_s", "rank_time_per_iter_s",
               "mcups", "speedup", "efficiency"};
  for (const auto& p : points)
    t.rows.push_back({scalingModeName(mode), std::to_string(p.ranks), std::to_string(p.threads), std::to_string(p.cells),
                      std::to_string(p.iterations), formatDouble(p.wallTime), formatDouble(p.wallPerIteration),
                      formatDouble(p.rankTimePerIteration), formatDouble(p.mcups), formatDouble(p.speedup),
                      formatDouble(p.efficiency)});
  return t;
}

namespace {

/// Most cubic factorization of n, largest factor on x.
Index3 factor3(int n) {
  Index3 best{n, 1, 1};
  int bestMax = n;
  for (int a = 1; a <= n; ++a) {
    if (n % a) continue;
    for (int b = 1; b <= n / a; ++b) {
      if ((n / a) % b) continue;
      const int c = n / a / b;
      const int m = std::max({a, b, c});
      if (m < bestMax && a >= b && b >= c) {
        bestMax = m;
        best = {a, b, c};
      }
    }
  }
  return best;
}

}  // namespace

ScalingResult benchScaling(const CaseFile& c, ScalingMode mode, const std::vector<int>& ranks,
                           const ScalingOptions& options) {
  if (ranks.empty()) throw Error("scaling study needs at least one point");
  if (mode == ScalingMode::Matrix && options.threads.size() != ranks.size())
    throw Error("matrix mode needs one thread count per rank count");
  ScalingResult out;
  out.mode = mode;
  RunOptions ro = options.run;
  ro.writeOutputs = false;
  ro.keepField = false;
  std::vector<CaseFile> cases;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    const int n = ranks[i];
    if (n < 1) throw Error("rank counts must be >= 1");
    CaseFile k = c;
    k.output.dir.clear();
    k.run.cuts = {};
    k.run.maxBlockCells = 0;
    k.run.ranks = n;
    k.run.blocks = n;
    k.topology.nodes = std::max(1, std::min(k.topology.nodes, n));
    if (mode == ScalingMode::Weak) {
      const Index3 f = factor3(n);
      for (std::size_t a = 0; a < 3; ++a) {
        k.zone.cells[a] = c.zone.cells[a] * f[a];
        k.zone.upper[a] = c.zone.lower[a] + (c.zone.upper[a] - c.zone.lower[a]) * f[a];
        k.initial.waveNumber[a] = c.initial.waveNumber[a] * f[a];
      }
    }
    if (mode == ScalingMode::Matrix) k.run.workers = options.threads[i];
    cases.push_back(std::move(k));
  }
  out.points.resize(cases.size());
  for (int round = 0; round < std::max(1, options.rounds); ++round)
    for (std::size_t i = 0; i < cases.size(); ++i) {
      const RunResult r = runCase(cases[i], std::nullopt, ro);
      ScalingPoint p;
      p.ranks = cases[i].run.ranks;
      p.threads = cases[i].run.workers;
      p.cells = r.metrics.totalCells;
      p.iterations = r.metrics.iterations;
      p.wallTime = r.metrics.wallTime;
      p.wallPerIteration = p.iterations ? p.wallTime / p.iterations : 0.0;
      p.rankTimePerIteration = r.rankCpuPerIteration();
      p.mcups = r.metrics.mcups();
      auto& best = out.points[i];
      if (round == 0) {
        best = p;
      } else {
        best.rankTimePerIteration = std::min(best.rankTimePerIteration, p.rankTimePerIteration);
        if (p.wallTime < best.wallTime) {
          best.wallTime = p.wallTime;
          best.wallPerIteration = p.wallPerIteration;
          best.mcups = p.mcups;
        }
      }
    }
  const auto& base = out.points.front();
  for (auto& p : out.points) {
    if (mode == ScalingMode::Weak) {
      p.speedup = p.rankTimePerIteration > 0.0 ? base.rankTimePerIteration / p.rankTimePerIteration : 0.0;
      p.efficiency = p.speedup;
    } else {
      p.speedup = p.wallPerIteration > 0.0 ? base.wallPerIteration / p.wallPerIteration : 0.0;
      const double resources = static_cast<double>(p.ranks * p.threads) / (base.ranks * base.threads);
      p.efficiency = p.speedup / resources;
    }
  }
  return out;
}

}  // namespace hcfd::harness
