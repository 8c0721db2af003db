#pragma once

#include <cstddef>
#include <functional>

namespace perfcost {

// Process-wide worker limit used by parallel_for. 1 means fully serial.
void set_max_threads(std::size_t threads);
std::size_t max_threads();

// Runs fn(i) for i in [0, n). Work units must be independent; results are the
// caller's responsibility to store by index, which keeps output independent of
// scheduling. Nested calls from inside a worker run serially. The exception
// from the lowest failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace perfcost
