#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace affsim {

// Worker count: AFFSIM_THREADS if set and positive, else hardware concurrency.
inline int worker_count() {
  if (const char* s = std::getenv("AFFSIM_THREADS")) {
    int v = std::atoi(s);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Calls f(i) for i in [0, n). Each index is handled exactly once; callers write
// results into per-index slots so the outcome does not depend on scheduling.
// The first exception thrown by any worker is rethrown.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  const std::size_t workers = std::min<std::size_t>(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::exception_ptr err;
  std::mutex mu;
  std::atomic<bool> failed = false;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) {
          if (failed.load(std::memory_order_relaxed)) return;
          f(i);
        }
      } catch (...) {
        std::lock_guard lk(mu);
        if (!err) err = std::current_exception();
        failed = true;
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace affsim
