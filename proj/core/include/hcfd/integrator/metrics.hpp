#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace hcfd {

class WorkerPool;

/// Timers and throughput of the main iteration phase.
struct RunMetrics {
  double wallTime = 0.0;   ///< seconds, main iterations only
  double cpuTime = 0.0;    ///< coordinator thread CPU seconds
  std::vector<double> iterationCpu;  ///< coordinator CPU seconds of each iteration
  double compTime = 0.0;
  double commTime = 0.0;
  std::map<std::string, double> phases;
  int iterations = 0;
  std::int64_t totalCells = 0;
  double initialResidual = 0.0;
  double finalResidual = 0.0;
  bool converged = false;
  double finalTime = 0.0;

  /// totalCells * iterations / wallTime / 1e6.
  double mcups() const;
  /// compTime / commTime; +infinity when no communication was timed.
  double compCommRatio() const;
};

double mcups(std::int64_t cells, int iterations, double seconds);

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  void reset() { start_ = std::chrono::steady_clock::now(); }

 private:
  std::chrono::steady_clock::time_point start_;
};

/// CPU seconds consumed by the calling thread.
double threadCpuSeconds();

/// CPU seconds of the calling thread plus the parallelFor helpers of an
/// optional pool, since construction.
class CpuMeter {
 public:
  explicit CpuMeter(const WorkerPool* pool = nullptr);
  double seconds() const;

 private:
  double now() const;
  const WorkerPool* pool_;
  double start_;
};

}  // namespace hcfd
