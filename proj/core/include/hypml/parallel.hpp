#pragma once

#include <cstddef>
#include <functional>

namespace hypml {

/// Caps the number of worker threads used by parallel loops (0 = hardware concurrency).
void set_max_threads(unsigned threads);
unsigned max_threads();

/// Runs body(i) for i in [0, n). Each index is visited exactly once; callers
/// write results into per-index slots so output never depends on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace hypml
