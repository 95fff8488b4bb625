#pragma once

#include <cstddef>
#include <functional>

namespace nlmvs {

/// Global worker count for parallel_for. 0 = hardware concurrency, 1 = sequential.
void set_worker_count(int n);
int worker_count();

/// Runs fn(i) for i in [begin, end). Each index must write only its own outputs;
/// the per-index work is identical regardless of partitioning, so results are
/// bitwise independent of the worker count.
void parallel_for(size_t begin, size_t end, const std::function<void(size_t)>& fn);

} // namespace nlmvs
