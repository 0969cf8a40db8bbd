#pragma once

#include <string>
#include <vector>

namespace hcfd::hetero {

enum class Phase { Compute, Transfer, Comm, Reconcile, Idle };
const char* phaseName(Phase p);
Phase parsePhase(const std::string& s);

/// One interval on one lane (a device, or "net" for inter-rank messages).
struct Interval {
  double start = 0.0;
  double end = 0.0;
  std::string lane;
  Phase phase = Phase::Compute;
  int stage = 0;
  std::string label;

  double duration() const { return end - start; }
};

/// Modeled schedule of one or more steps. Times are seconds from the start.
struct Timeline {
  std::vector<std::string> lanes;
  std::vector<Interval> intervals;
  double wallTime = 0.0;

  void addLane(const std::string& lane);
  void add(Interval iv);
  /// Replaces the Idle intervals with the gaps of every lane up to wallTime.
  void fillIdle();
  /// Appends `other` shifted to start at this timeline's wallTime.
  void append(const Timeline& other);
};

struct LaneBreakdown {
  std::string lane;
  double compute = 0.0;
  double transfer = 0.0;
  double comm = 0.0;
  double reconcile = 0.0;
  double idle = 0.0;

  double total() const { return compute + transfer + comm + reconcile + idle; }
};

struct TimelineReport {
  std::vector<LaneBreakdown> lanes;
  double wallTime = 0.0;
  double commTime = 0.0;    ///< transfer + comm, summed over lanes
  double hiddenComm = 0.0;  ///< part of commTime during which some lane computes
  double hiddenFraction = 0.0;
};

/// Per-lane totals and the share of communication overlapped by computation.
TimelineReport timelineReport(const Timeline& t);

/// CSV with columns start,end,lane,phase,stage,label.
std::string timelineCsv(const Timeline& t);
Timeline parseTimelineCsv(const std::string& text);
void writeTimelineCsv(const Timeline& t, const std::string& path);

}  // namespace hcfd::hetero
