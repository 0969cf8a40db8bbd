#include "hcfd/util/worker_pool.hpp"

#include <atomic>
#include <ctime>
#include <exception>

#if defined(__linux__)
#include <pthread.h>
#include <sched.h>
#endif

namespace hcfd {

namespace {

std::int64_t threadCpuNs() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<std::int64_t>(ts.tv_sec) * 1000000000 + ts.tv_nsec;
}

}  // namespace

bool pinCurrentThread(int core) {
#if defined(__linux__)
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  cpu_set_t set;
  CPU_ZERO(&set);
  CPU_SET(static_cast<unsigned>(core) % hw, &set);
  return pthread_setaffinity_np(pthread_self(), sizeof(set), &set) == 0;
#else
  (void)core;
  return false;
#endif
}

WorkerPool::WorkerPool(int threads, bool pin, int firstCore) {
  workers_.reserve(static_cast<std::size_t>(std::max(0, threads)));
  for (int t = 0; t < threads; ++t) {
    workers_.emplace_back([this, pin, core = firstCore + t] {
      if (pin) pinCurrentThread(core);
      run();
    });
  }
  pinned_ = pin && threads > 0;
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  wake_.notify_all();
  for (auto& t : workers_) t.join();
}

void WorkerPool::run() {
  for (;;) {
    std::function<void()> job;
    {
      std::unique_lock lock(mutex_);
      wake_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;
      job = std::move(queue_.front());
      queue_.pop_front();
    }
    job();
  }
}

std::future<void> WorkerPool::submit(std::function<void()> job) {
  auto task = std::make_shared<std::packaged_task<void()>>(std::move(job));
  auto fut = task->get_future();
  if (workers_.empty()) {
    (*task)();
    return fut;
  }
  {
    std::lock_guard lock(mutex_);
    queue_.emplace_back([task] { (*task)(); });
  }
  wake_.notify_one();
  return fut;
}

void WorkerPool::parallelFor(std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  if (workers_.empty() || n == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  // Helpers that have not started by the time the caller finished draining
  // are closed out and return immediately, so a call from inside a busy
  // worker never waits on queued jobs.
  struct Shared {
    std::atomic<std::size_t> next{0};
    std::mutex m;
    std::condition_variable done;
    int active = 0;
    bool closed = false;
    std::exception_ptr error;
  };
  auto shared = std::make_shared<Shared>();
  auto drain = [shared, n, &fn] {
    for (;;) {
      const std::size_t i = shared->next.fetch_add(1);
      if (i >= n) break;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(shared->m);
        if (!shared->error) shared->error = std::current_exception();
        shared->next.store(n);
      }
    }
  };

  const std::size_t helpers = std::min<std::size_t>(workers_.size(), n - 1);
  {
    std::lock_guard lock(mutex_);
    for (std::size_t h = 0; h < helpers; ++h) {
      queue_.emplace_back([this, shared, drain] {
        {
          std::lock_guard lock(shared->m);
          if (shared->closed) return;
          ++shared->active;
        }
        const std::int64_t cpu0 = threadCpuNs();
        drain();
        helperCpuNs_ += threadCpuNs() - cpu0;
        std::lock_guard lock(shared->m);
        if (--shared->active == 0) shared->done.notify_all();
      });
    }
  }
  wake_.notify_all();
  drain();
  std::unique_lock lock(shared->m);
  shared->closed = true;
  shared->done.wait(lock, [&] { return shared->active == 0; });
  if (shared->error) std::rethrow_exception(shared->error);
}

}  // namespace hcfd
