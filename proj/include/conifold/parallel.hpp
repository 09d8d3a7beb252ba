#pragma once

#include <cstddef>
#include <functional>

namespace conifold {

// Worker count: CONIFOLD_LAB_THREADS if set, else the hardware concurrency.
unsigned worker_count();

// Runs fn(i) for i in [0, n) on up to worker_count() threads. Each index is
// handled exactly once; the first exception is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace conifold
