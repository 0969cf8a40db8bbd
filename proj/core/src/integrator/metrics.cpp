#include "hcfd/integrator/metrics.hpp"

#include <ctime>
#include <limits>

#include "hcfd/util/worker_pool.hpp"

namespace hcfd {

double mcups(std::int64_t cells, int iterations, double seconds) {
  if (!(seconds > 0.0)) return 0.0;
  return static_cast<double>(cells) * iterations / seconds / 1e6;
}

double RunMetrics::mcups() const { return hcfd::mcups(totalCells, iterations, wallTime); }

double RunMetrics::compCommRatio() const {
  if (!(commTime > 0.0)) return std::numeric_limits<double>::infinity();
  return compTime / commTime;
}

double threadCpuSeconds() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

CpuMeter::CpuMeter(const WorkerPool* pool) : pool_(pool), start_(now()) {}

double CpuMeter::now() const { return threadCpuSeconds() + (pool_ ? pool_->helperCpuSeconds() : 0.0); }

double CpuMeter::seconds() const { return now() - start_; }

}  // namespace hcfd
