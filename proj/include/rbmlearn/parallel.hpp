#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rbmlearn {

/// Thread count from RBMLEARN_THREADS, else the hardware concurrency.
inline int default_threads() {
  if (const char* env = std::getenv("RBMLEARN_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(task) for task in [0, tasks) on up to `threads` workers. Tasks must
/// write only to their own output slot; the first exception is rethrown.
template <typename Fn>
void parallel_for(int tasks, int threads, Fn&& fn) {
  threads = std::clamp(threads, 1, std::max(1, tasks));
  if (threads == 1) {
    for (int t = 0; t < tasks; ++t) fn(t);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (int t = next++; t < tasks; t = next++) {
        try {
          fn(t);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace rbmlearn
