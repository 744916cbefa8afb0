#pragma once

#include <cstddef>
#include <functional>
#include <string>

namespace ibd {

// Worker count resolution: explicit argument > IBD_WORKERS env var > 1.
// Results never depend on the worker count; parallel loops only write to
// disjoint, preallocated slots.
std::size_t default_workers();

// Runs fn(begin, end) over contiguous chunks of [0, count) on up to
// `workers` threads. With workers <= 1 runs inline. If several chunks
// throw, the exception from the lowest chunk index is rethrown.
void parallel_chunks(std::size_t count, std::size_t workers,
                     const std::function<void(std::size_t, std::size_t)>& fn);

} // namespace ibd
