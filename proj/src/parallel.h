#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace rotavg::internal {

// Runs fn(i) for i in [0, n) on up to num_threads threads. Each index is
// visited exactly once; fn must only write to per-index state.
template <typename Fn>
void ParallelFor(std::size_t n, int num_threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::max(1, num_threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    threads.emplace_back([begin, end, &fn] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& t : threads) t.join();
}

}  // namespace rotavg::internal
