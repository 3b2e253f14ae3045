#pragma once

// parallel_for over an index range. Workers pull indices from an atomic
// counter; callers must write results into per-index slots so the outcome is
// independent of scheduling. threads == 0 selects the hardware concurrency.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace kbpot::parallel {

inline unsigned resolve_threads(unsigned threads) {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

inline void parallel_for(std::size_t n, unsigned threads,
                         const std::function<void(std::size_t)>& body) {
  const unsigned t = resolve_threads(threads);
  if (t <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const auto n_workers = std::min<std::size_t>(t, n);
  pool.reserve(n_workers);
  for (std::size_t k = 0; k < n_workers; ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace kbpot::parallel
