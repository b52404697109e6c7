#include "wfbm/parallel.hpp"

#include <atomic>

namespace wfbm {

namespace {
std::atomic<unsigned> g_default_workers{0};
}

void set_default_workers(unsigned workers) noexcept { g_default_workers = workers; }

unsigned default_workers() noexcept { return g_default_workers; }

unsigned worker_count(unsigned requested) noexcept {
  unsigned w = requested != 0 ? requested : g_default_workers.load();
  if (w == 0) w = std::max(1u, std::thread::hardware_concurrency());
  return w;
}

}  // namespace wfbm
