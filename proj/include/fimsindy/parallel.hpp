#pragma once

#include <cstddef>
#include <functional>

namespace fimsindy {

/// Worker count used by parallel_for. 0 means hardware concurrency.
void set_thread_count(unsigned n);
unsigned thread_count();

/// Runs body(i) for i in [0, n). Every index is visited exactly once; the
/// first exception thrown by any worker is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Deterministic child seed for (seed, index) pairs.
unsigned long long derive_seed(unsigned long long seed, unsigned long long index);

}  // namespace fimsindy
