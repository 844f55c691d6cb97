#pragma once

#include <cstddef>
#include <functional>

namespace fmtt {

/// Worker count: `requested` if positive, else FMTT_THREADS if set, else the
/// hardware concurrency. FMTT_THREADS also caps explicit requests.
int worker_count(int requested = 0);

/// Runs body(i) for i in [0, n) on up to `workers` threads. Each index runs
/// exactly once; the first exception thrown is rethrown on the caller.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body);

}  // namespace fmtt
