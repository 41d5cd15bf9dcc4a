#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mia {

/// Runs fn(i) for i in [0, n) on up to `max_workers` threads (0 = hardware
/// concurrency). Results are written by index, so output order never depends on
/// scheduling. The first exception thrown is rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t max_workers, Fn&& fn) {
  std::size_t workers = max_workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : max_workers;
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (!failed.load()) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed.store(true);
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace mia
