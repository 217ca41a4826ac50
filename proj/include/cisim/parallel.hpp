#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <vector>

namespace cisim {

// Worker count from CISIM_THREADS (default: hardware concurrency, at least 1).
int thread_count();

// Runs body(i) for i in [0, n) on up to thread_count() workers. Results must
// be written to per-index slots; the first exception (lowest index) is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

template <class T, class F>
std::vector<T> parallel_map(std::size_t n, F&& fn) {
  std::vector<T> out(n);
  parallel_for(n, [&](std::size_t i) { out[i] = fn(i); });
  return out;
}

}  // namespace cisim
