#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace wfbm {

// Worker cap shared by all path-parallel loops.  0 means hardware concurrency.
unsigned worker_count(unsigned requested) noexcept;
void set_default_workers(unsigned workers) noexcept;
unsigned default_workers() noexcept;

// Runs body(worker, begin, end) over contiguous blocks of [0, n).  Each index is
// handled exactly once; results written by index are schedule independent.
template <typename Body>
void parallel_blocks(std::size_t n, unsigned workers, Body&& body) {
  const unsigned w = static_cast<unsigned>(
      std::min<std::size_t>(std::max<std::size_t>(n, 1), worker_count(workers)));
  if (w <= 1) {
    body(0u, std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> threads;
  std::exception_ptr error;
  std::mutex error_mutex;
  const std::size_t chunk = (n + w - 1) / w;
  for (unsigned k = 0; k < w; ++k) {
    const std::size_t begin = std::min(n, k * chunk);
    const std::size_t end = std::min(n, begin + chunk);
    threads.emplace_back([&, k, begin, end] {
      try {
        body(k, begin, end);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace wfbm
