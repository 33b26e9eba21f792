#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace okannet {

// Worker count resolved once from the environment: OKANNET_DETERMINISTIC=1
// forces 1, OKANNET_THREADS caps the pool, otherwise hardware concurrency.
int worker_threads();

bool deterministic_mode();

namespace detail {
int resolve_worker_threads();
}

// Splits [0, n) into at most worker_threads() contiguous chunks and runs
// `fn(begin, end)` on each. Chunk boundaries depend only on n and the
// resolved thread count, and every index is visited exactly once, so any
// computation that writes disjoint per-index outputs is reproducible.
template <typename F>
void parallel_for(int64_t n, F&& fn) {
  if (n <= 0) return;
  const int64_t workers =
      std::min<int64_t>(worker_threads(), n);
  if (workers <= 1) {
    fn(int64_t{0}, n);
    return;
  }
  const int64_t chunk = (n + workers - 1) / workers;
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<size_t>(workers - 1));
  for (int64_t t = 1; t < workers; ++t) {
    const int64_t b = t * chunk;
    const int64_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  fn(int64_t{0}, std::min(n, chunk));
}

}  // namespace okannet
