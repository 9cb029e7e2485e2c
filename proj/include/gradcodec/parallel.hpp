#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace gradcodec {

// Worker count: GRADCODEC_THREADS env var caps it, 0 or unset means auto.
std::size_t worker_count();

// Runs fn over [begin, end) split into fixed-size chunks.  Chunk boundaries
// do not depend on the worker count, so chunk-local results are reproducible.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t, std::size_t)>& fn,
                  std::size_t chunk = 1 << 16);

// Deterministic reduction: per-chunk partial sums combined in chunk order.
double parallel_sum(std::size_t begin, std::size_t end,
                    const std::function<double(std::size_t, std::size_t)>& fn,
                    std::size_t chunk = 1 << 16);

}  // namespace gradcodec
