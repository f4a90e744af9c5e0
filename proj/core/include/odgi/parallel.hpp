#pragma once

#include <cstddef>
#include <functional>

namespace odgi {

/// Worker count: ODGI_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
unsigned worker_count();

/// Calls body(k) for k in [0, n) across worker_count() threads. Each index is
/// visited exactly once; results must be written to per-index slots. The first
/// exception thrown by any call is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace odgi
