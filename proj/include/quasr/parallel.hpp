#pragma once

#include <functional>

namespace quasr {

// Clamp a requested thread count to something usable (>= 1).
int resolve_threads(int requested);

// Run fn(i) for i in [0, count). Work is split into contiguous index ranges,
// one per worker, so each index always lands on the same worker for a given
// (count, threads) pair. Callers write results into preallocated per-index
// slots, which keeps multi-threaded output identical to the serial one.
// threads <= 1 runs inline. The first exception thrown by any worker is
// rethrown on the calling thread.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

}  // namespace quasr
