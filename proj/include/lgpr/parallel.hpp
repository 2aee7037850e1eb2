#pragma once

#include <cstddef>
#include <functional>

namespace lgpr {

// Worker cap from LGPR_THREADS (default 1).
std::size_t worker_count();

// Runs body(i) for i in [0, n) on up to worker_count() threads. Each index must
// own its outputs; callers reduce afterwards in index order so results do not
// depend on the schedule.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace lgpr
