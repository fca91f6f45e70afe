#pragma once

#include <cstddef>
#include <functional>

namespace wes {

enum class Execution { Serial, Parallel };

unsigned default_workers();

// Runs fn(0..n-1) on up to `workers` std::threads. The first exception thrown
// by any task is rethrown on the calling thread after all tasks finish.
void parallel_for(size_t n, unsigned workers, const std::function<void(size_t)>& fn);

}  // namespace wes
