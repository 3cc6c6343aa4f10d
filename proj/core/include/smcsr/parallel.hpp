#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace smcsr {

// Static chunked parallel-for. Each index is processed exactly once and the
// body must only write to index-owned slots, so results do not depend on the
// worker count.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body) {
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::size_t w = static_cast<std::size_t>(workers);
  if (w > n) w = n;
  std::vector<std::thread> threads;
  threads.reserve(w);
  for (std::size_t t = 0; t < w; ++t) {
    threads.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += w) body(i);
    });
  }
  for (auto& th : threads) th.join();
}

}  // namespace smcsr
