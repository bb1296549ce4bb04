#pragma once

#include <cstddef>
#include <functional>

namespace bernstab {

// Process-wide worker count for grid sweeps. Results never depend on it:
// work is split into index ranges and every reduction runs in index order.
void set_worker_count(int n);
int worker_count();

// Calls body(i) for i in [0, n). Exceptions from workers are rethrown
// (the one from the lowest failing chunk).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace bernstab
