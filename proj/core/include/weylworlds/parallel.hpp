#pragma once

#include <cstddef>
#include <functional>

namespace weylworlds {

// Worker count: hardware concurrency, capped by WEYLWORLDS_THREADS when set.
std::size_t thread_count();

// Overrides the worker count for the current process (0 restores the default).
void set_thread_count(std::size_t n);

// Runs body(begin, end) over a static partition of [0, n). Chunk boundaries
// depend only on n and the worker count, and each index is visited by exactly
// one call, so per-index writes are race-free and deterministic.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk = 1024);

}  // namespace weylworlds
