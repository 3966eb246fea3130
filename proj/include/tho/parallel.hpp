#pragma once

#include <cstddef>
#include <functional>

namespace tho {

// Worker count: THO_THREADS when set (>= 1), otherwise the hardware concurrency.
std::size_t thread_budget();

// Runs fn(i) for i in [0, n) on up to thread_budget() threads. Each index is
// processed exactly once; the first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace tho
