#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <cstddef>
#include <deque>
#include <functional>
#include <future>
#include <mutex>
#include <thread>
#include <vector>

namespace hcfd {

/// Fixed set of worker threads with a FIFO job queue.
///
/// parallelFor hands out indices dynamically, one at a time, to the workers
/// and to the calling thread. A pool built with zero threads runs everything
/// inline on the caller, which is the serial fallback used for single-worker
/// devices. Workers can be pinned to cores (best effort; failures are ignored).
class WorkerPool {
 public:
  explicit WorkerPool(int threads, bool pin = false, int firstCore = 0);
  ~WorkerPool();

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  int threads() const { return static_cast<int>(workers_.size()); }
  bool pinned() const { return pinned_; }

  /// Runs fn(i) for every i in [0, n). The first exception thrown by any
  /// invocation is rethrown here after all invocations finished.
  void parallelFor(std::size_t n, const std::function<void(std::size_t)>& fn);

  /// Queues one job. Runs it immediately when the pool has no threads.
  std::future<void> submit(std::function<void()> job);

  /// CPU seconds worker threads spent inside parallelFor, accumulated.
  double helperCpuSeconds() const { return static_cast<double>(helperCpuNs_.load()) * 1e-9; }

 private:
  void run();

  std::vector<std::thread> workers_;
  std::deque<std::function<void()>> queue_;
  std::mutex mutex_;
  std::condition_variable wake_;
  bool stopping_ = false;
  bool pinned_ = false;
  std::atomic<std::int64_t> helperCpuNs_{0};
};

/// Pins the calling thread to `core` modulo the host core count. Returns false
/// when the platform refuses.
bool pinCurrentThread(int core);

}  // namespace hcfd
