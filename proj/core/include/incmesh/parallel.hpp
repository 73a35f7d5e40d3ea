#pragma once
#include <functional>

namespace incmesh {

// Worker count: INCMESH_THREADS if set, else hardware concurrency.
int thread_count();

// Runs fn(0..n-1) across workers. Each index is processed exactly once and
// results must be written to per-index slots, which keeps outputs independent
// of the thread count.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace incmesh
