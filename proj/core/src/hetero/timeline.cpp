#include "hcfd/hetero/timeline.hpp"

#include <algorithm>
#include <map>

#include "hcfd/core/state.hpp"
#include "hcfd/util/csv.hpp"

namespace hcfd::hetero {

namespace {
constexpr const char* kPhaseNames[] = {"compute", "transfer", "comm", "reconcile", "idle"};
}

const char* phaseName(Phase p) { return kPhaseNames[static_cast<int>(p)]; }

Phase parsePhase(const std::string& s) {
  for (int i = 0; i < 5; ++i)
    if (s == kPhaseNames[i]) return static_cast<Phase>(i);
  throw Error("unknown timeline phase '" + s + "'");
}

void Timeline::addLane(const std::string& lane) {
  if (std::find(lanes.begin(), lanes.end(), lane) == lanes.end()) lanes.push_back(lane);
}

void Timeline::add(Interval iv) {
  if (iv.end < iv.start) throw Error("timeline interval ends before it starts");
  addLane(iv.lane);
  wallTime = std::max(wallTime, iv.end);
  intervals.push_back(std::move(iv));
}

void Timeline::fillIdle() {
  std::erase_if(intervals, [](const Interval& iv) { return iv.phase == Phase::Idle; });
  std::vector<Interval> idle;
  for (const auto& lane : lanes) {
    std::vector<std::pair<double, double>> busy;
    for (const auto& iv : intervals)
      if (iv.lane == lane && iv.phase != Phase::Idle) busy.emplace_back(iv.start, iv.end);
    std::sort(busy.begin(), busy.end());
    double t = 0.0;
    for (const auto& [s, e] : busy) {
      if (s > t) idle.push_back({t, s, lane, Phase::Idle, -1, ""});
      t = std::max(t, e);
    }
    if (wallTime > t) idle.push_back({t, wallTime, lane, Phase::Idle, -1, ""});
  }
  for (auto& iv : idle) intervals.push_back(std::move(iv));
}

void Timeline::append(const Timeline& other) {
  const double t0 = wallTime;
  for (const auto& lane : other.lanes) addLane(lane);
  for (Interval iv : other.intervals) {
    iv.start += t0;
    iv.end += t0;
    intervals.push_back(std::move(iv));
  }
  wallTime = t0 + other.wallTime;
}

TimelineReport timelineReport(const Timeline& t) {
  TimelineReport r;
  r.wallTime = t.wallTime;
  std::map<std::string, LaneBreakdown> lanes;
  std::vector<std::pair<double, double>> compute;
  for (const auto& iv : t.intervals) {
    auto& l = lanes[iv.lane];
    l.lane = iv.lane;
    const double d = iv.duration();
    switch (iv.phase) {
      case Phase::Compute:
        l.compute += d;
        compute.emplace_back(iv.start, iv.end);
        break;
      case Phase::Transfer: l.transfer += d; break;
      case Phase::Comm: l.comm += d; break;
      case Phase::Reconcile: l.reconcile += d; break;
      case Phase::Idle: l.idle += d; break;
    }
  }
  for (const auto& name : t.lanes) {
    auto it = lanes.find(name);
    LaneBreakdown l = it == lanes.end() ? LaneBreakdown{name} : it->second;
    // Time the lane spends outside recorded intervals counts as idle.
    l.idle += std::max(0.0, t.wallTime - l.total());
    r.lanes.push_back(l);
  }

  std::sort(compute.begin(), compute.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& c : compute) {
    if (!merged.empty() && c.first <= merged.back().second)
      merged.back().second = std::max(merged.back().second, c.second);
    else
      merged.push_back(c);
  }
  for (const auto& iv : t.intervals) {
    if (iv.phase != Phase::Transfer && iv.phase != Phase::Comm) continue;
    r.commTime += iv.duration();
    for (const auto& [s, e] : merged) r.hiddenComm += std::max(0.0, std::min(e, iv.end) - std::max(s, iv.start));
  }
  r.hiddenFraction = r.commTime > 0.0 ? r.hiddenComm / r.commTime : 0.0;
  return r;
}

std::string timelineCsv(const Timeline& t) {
  std::string out = "start,end,lane,phase,stage,label\n";
  for (const auto& iv : t.intervals)
    out += csvLine({formatDouble(iv.start), formatDouble(iv.end), iv.lane, phaseName(iv.phase),
                    std::to_string(iv.stage), iv.label});
  return out;
}

Timeline parseTimelineCsv(const std::string& text) {
  const auto rows = parseCsv(text);
  if (rows.empty() || rows[0] != std::vector<std::string>{"start", "end", "lane", "phase", "stage", "label"})
    throw Error("timeline csv: unexpected header");
  Timeline t;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != 6) throw Error("timeline csv: row " + std::to_string(i) + " has " + std::to_string(f.size()) + " fields");
    t.add({std::stod(f[0]), std::stod(f[1]), f[2], parsePhase(f[3]), std::stoi(f[4]), f[5]});
  }
  return t;
}

void writeTimelineCsv(const Timeline& t, const std::string& path) { writeTextFile(path, timelineCsv(t)); }

}  // namespace hcfd::hetero
