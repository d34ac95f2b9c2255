#pragma once

#include <cstddef>
#include <functional>

namespace infoputs {

// Worker count: PUTS_WORKERS if set and positive, else hardware concurrency.
std::size_t worker_count();

// Runs f(0..n-1) over worker_count() threads with static chunking. The first
// exception thrown by any task is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f);

}  // namespace infoputs
