#pragma once

#include <cstddef>
#include <functional>

namespace hmc
{

/// Resolve a worker count: explicit value if positive, else HMC_THREADS, else
/// hardware concurrency (at least 1).
unsigned resolve_threads(int requested);

/// Run body(i) for i in [0, count) on up to `threads` workers. Indices are
/// handed out in contiguous blocks; the first exception is rethrown after all
/// workers join.
void parallel_for(std::size_t count, unsigned threads, std::function<void(std::size_t)> const& body);

}  // namespace hmc
