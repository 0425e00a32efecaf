#pragma once

#include <cstddef>
#include <functional>

namespace structadapt {

//! Worker cap used by parallel_for; 0 restores the hardware default.
void set_thread_count(unsigned n);
unsigned thread_count();

//! Calls fn(i, worker) for i in [0, count). Indices are handed out in
//! contiguous chunks; worker is in [0, thread_count()). Results must be
//! written to per-index slots so that the outcome does not depend on the
//! schedule. The first exception thrown by any worker is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t, unsigned)>& fn);

} // namespace structadapt
