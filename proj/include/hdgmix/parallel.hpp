#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hdgmix {

/// Calls fn(i) for i in [0, n) on a small thread pool. Each index is visited exactly once;
/// callers write results into per-index slots so the outcome does not depend on scheduling.
template <class Fn>
void parallel_for(int n, Fn&& fn) {
  const int nthreads = std::max(1, std::min<int>(std::thread::hardware_concurrency(), n / 64));
  if (nthreads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr err;
  std::mutex m;
  std::vector<std::thread> pool;
  for (int t = 0; t < nthreads; ++t)
    pool.emplace_back([&, t] {
      try {
        for (int i = t; i < n; i += nthreads) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(m);
        if (!err) err = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace hdgmix
