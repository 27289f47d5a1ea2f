#pragma once

#include <cstddef>
#include <functional>

namespace rfsbound {

/// Worker count: hardware concurrency, capped by RFS_BOUND_THREADS when set.
unsigned worker_count();

/// Runs body(begin, end) over contiguous chunks of [0, n). Chunk boundaries
/// depend only on n and `grain`, never on the worker count, so chunked
/// reductions are reproducible.
void parallel_chunks(std::size_t n, std::size_t grain,
                     const std::function<void(std::size_t chunk, std::size_t begin, std::size_t end)>& body);

}  // namespace rfsbound
