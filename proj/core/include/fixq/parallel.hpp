#pragma once

#include <cstddef>
#include <functional>

namespace fixq {

/// Worker count used by data-parallel loops; defaults to the hardware
/// concurrency. Results never depend on this setting.
void set_thread_count(unsigned n) noexcept;
unsigned thread_count() noexcept;

/// Runs fn(i) for i in [0, n) across worker threads. Each index is visited
/// exactly once; the first exception thrown by any call is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace fixq
