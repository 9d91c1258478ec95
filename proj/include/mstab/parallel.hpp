#pragma once

#include <cstddef>
#include <functional>

namespace mstab {

/// Worker count used by parallel_for; 0 or negative selects the hardware concurrency.
void set_threads(int n);
int threads();

/// Runs fn(i) for i in [0, n) on the configured workers; the first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace mstab
