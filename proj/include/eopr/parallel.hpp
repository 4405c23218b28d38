#pragma once

#include <cstddef>
#include <functional>

namespace eopr {

// Worker cap: EOPR_THREADS when set (clamped to >= 1), otherwise the
// hardware concurrency.
std::size_t thread_budget();

// Runs fn(i) for i in [0, n). Tasks must write only to disjoint slots so the
// result is independent of scheduling. Nested calls run serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace eopr
