#pragma once

#include <cstddef>
#include <functional>

namespace phaseret {

/// Worker count: PHASERET_THREADS when set to a positive integer, otherwise
/// the hardware concurrency (at least 1).
int thread_count();

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 means
/// thread_count()). Indices are handed out dynamically; callers write
/// results into per-index slots so the outcome is independent of
/// scheduling. The first exception thrown by a body is rethrown after all
/// workers stop.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body, int threads = 0);

} // namespace phaseret
