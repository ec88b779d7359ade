#pragma once

#include <cstddef>
#include <functional>

namespace tradediff {

/// Thread count taken from TRADEDIFF_THREADS when set to a positive integer,
/// otherwise the hardware concurrency (at least 1).
unsigned default_thread_count();

/// Calls body(k) for every k in [0, n). Indices are split into contiguous
/// chunks, one per worker; each index is processed exactly once, so any body
/// that only writes slot k gives results independent of the thread count.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace tradediff
