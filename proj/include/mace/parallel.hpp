#pragma once

#include <cstddef>
#include <functional>

namespace mace {

// Worker cap from MACE_KERNEL_THREADS; unset or 0 means hardware concurrency.
std::size_t kernel_threads();

// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index runs
// exactly once; callers write results per index and reduce in index order,
// so outcomes do not depend on the thread count. The first exception thrown
// by any fn is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace mace
