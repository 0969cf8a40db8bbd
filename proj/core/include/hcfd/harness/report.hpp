#pragma once

#include <string>
#include <vector>

#include "hcfd/harness/runner.hpp"

namespace hcfd::harness {

/// Column-named table with a stable CSV form.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::string csv() const;
  /// Fixed-width text for terminals.
  std::string text() const;
  /// Column index; throws Error when missing.
  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& col) const;

  friend bool operator==(const Table&, const Table&) = default;
};

/// Throws Error on ragged rows or an empty input.
Table parseTable(const std::string& csv);
void writeTable(const Table& t, const std::string& path);
Table readTable(const std::string& path);

struct NamedRun {
  std::string label;
  const CaseFile& config;
  const RunResult& result;
};

/// Columns: label, kind, ranks, cells, iterations, wall_s, mcups, comp_s,
/// comm_s, comp_comm_ratio, modeled_s, modeled_mcups, converged,
/// initial_residual, final_residual.
Table metricsTable(const std::vector<NamedRun>& runs);

struct SweepOptions {
  int iterations = 1;
  RunOptions run;
};

struct SweepPoint {
  double ratio = 0.0;          ///< requested
  double realizedRatio = 0.0;  ///< coprocessor cells / CPU cells after rounding to whole cells
  double modeledTime = 0.0;    ///< seconds for the run
  double modeledSerialized = 0.0;
  double modeledMcups = 0.0;
  double hiddenFraction = 0.0;
  double wallTime = 0.0;
  double wallMcups = 0.0;
  double transferSeconds = 0.0;  ///< steady per-stage coprocessor link time, rank 0
};

struct SweepResult {
  std::vector<SweepPoint> points;
  double argmax = 0.0;            ///< ratio with the highest modeled MCUPS
  double closedFormOptimum = 0.0; ///< balance point of the timeline model
  Table table() const;
};

/// One run per ratio. Corner-style cases (explicit x cuts over topology.nodes
/// slabs) are re-cut for every ratio; others only change the plan's ratio.
SweepResult sweepLoadRatio(const CaseFile& c, const std::vector<double>& ratios, const SweepOptions& options = {});

/// Ratio r where CPU and coprocessor finish a stage together:
/// N/Rc - X nc = r (N/Rp + X np), N cells per node, rates Rc and Rp, X the
/// per-stage link time of one coprocessor.
double closedFormOptimum(double nodeCells, int cpus, int coprocessors, double cpuRate, double coprocessorRate,
                         double transferSeconds);

enum class ScalingMode { Weak, Strong, Matrix };
ScalingMode parseScalingMode(const std::string& s);
const char* scalingModeName(ScalingMode m);

struct ScalingPoint {
  int ranks = 1;
  int threads = 1;
  std::int64_t cells = 0;
  int iterations = 0;
  double wallTime = 0.0;
  double wallPerIteration = 0.0;
  double rankTimePerIteration = 0.0;  ///< slowest rank's CPU seconds per iteration
  double mcups = 0.0;
  double speedup = 1.0;
  double efficiency = 1.0;
};

struct ScalingResult {
  ScalingMode mode = ScalingMode::Weak;
  std::vector<ScalingPoint> points;
  /// (max - min) / min of rankTimePerIteration.
  double timeVariation() const;
  Table table() const;
};

struct ScalingOptions {
  /// Matrix mode: threads per rank for each point (same length as ranks).
  std::vector<int> threads;
  /// Passes over all points; each point keeps its fastest pass. Interleaving
  /// spreads slow phases of the host over every point.
  int rounds = 1;
  RunOptions run;
};

/// Weak: the case is one rank's share and the zone grows with the rank
/// count (factorized over the axes). Strong: fixed zone split over the ranks.
/// Matrix: fixed zone, (ranks, threads) pairs. Speedup and efficiency use the
/// first point as the baseline; times are per-rank CPU seconds per
/// iteration, which is what each rank costs on a core of its own.
ScalingResult benchScaling(const CaseFile& c, ScalingMode mode, const std::vector<int>& ranks,
                           const ScalingOptions& options = {});

}  // namespace hcfd::harness
