#pragma once

#include <cstddef>
#include <functional>

namespace varsketch {

/// Worker count: VARSKETCH_THREADS if set and positive, otherwise the
/// hardware concurrency (at least 1).
std::size_t thread_count();

/// Runs body(i) for i in [0, n) across thread_count() workers. Each index is
/// executed exactly once; callers write results to per-index slots so the
/// outcome does not depend on scheduling. The first exception thrown by any
/// body is rethrown on the calling thread. Calls made from inside a body run
/// serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace varsketch
