#pragma once

#include <functional>

namespace fastsls {

/// Worker count for parallel maps: FASTSLS_THREADS if set, otherwise the
/// hardware concurrency. Returns 1 when `parallel` is false.
int worker_count(bool parallel);

/// Static partition of [0, n) across `workers` threads. Each index is
/// processed exactly once; the body must write only to its own slice.
void parallel_for(int n, int workers, const std::function<void(int)>& body);

}  // namespace fastsls
