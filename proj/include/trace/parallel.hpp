#pragma once

#include <functional>

namespace trace {

// Worker count: TRACE_THREADS env var when set, else hardware concurrency.
int thread_count();

// Static-chunk fork/join over [0, n). Each index runs in exactly one chunk and
// every per-index computation is self-contained, so results are identical for
// any worker count. Calls made from inside a worker run inline (no nesting).
void parallel_for(int n, const std::function<void(int begin, int end)>& fn);

// Same, passing the chunk's worker slot for per-worker scratch buffers.
// Slots are in [0, thread_count()).
void parallel_for_workers(int n, const std::function<void(int begin, int end, int worker)>& fn);

// Strided assignment (index mod workers); balances triangular workloads.
void parallel_for_strided(int n, const std::function<void(int i)>& fn);

} // namespace trace
