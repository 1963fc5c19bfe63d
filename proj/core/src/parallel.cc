#include "marginlm/parallel.h"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace marginlm {

int WorkerCount() {
  if (const char* env = std::getenv("MARGINLM_THREADS")) {
    int n = std::atoi(env);
    if (n < 1) n = 1;
    if (n > 64) n = 64;
    return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void ParallelFor(std::size_t n, const std::function<void(std::size_t)>& fn) {
  int workers = WorkerCount();
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  if (static_cast<std::size_t>(workers) > n) workers = static_cast<int>(n);

  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace marginlm
