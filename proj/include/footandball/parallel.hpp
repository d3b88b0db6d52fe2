#pragma once

#include <cstddef>
#include <functional>

namespace fnb {

/// Number of worker threads used by kernels. Initialized from the
/// FNB_NUM_THREADS environment variable (default: hardware concurrency).
int num_threads();
/// n <= 0 restores the initial setting.
void set_num_threads(int n);

/// Runs fn(i) for i in [0, count). Work is split into contiguous chunks; each
/// index is processed by exactly one thread, so results that are written per
/// index do not depend on the thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace fnb
