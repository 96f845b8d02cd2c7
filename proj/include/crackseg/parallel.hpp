#pragma once

#include <cstddef>
#include <functional>

namespace crackseg {

/// Caps worker threads used by parallel_for. 0 means hardware concurrency; default 1.
void set_thread_count(int n);
int thread_count();

/// Calls fn(i) for i in [0, n). Each index runs exactly once; results must be written to
/// per-index slots so the outcome does not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace crackseg
