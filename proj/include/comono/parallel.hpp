#pragma once

#include <functional>

namespace comono {

int hardware_threads();

/// Thread count to use: `requested` if positive, otherwise the
/// COMONO_RDD_THREADS environment variable, otherwise all hardware threads.
int resolve_thread_count(int requested);

/// Runs body(i) for i in [0, n) over `num_threads` workers with a static
/// block partition. Each index is processed by exactly one worker, so code
/// that writes only to slot i is race-free and results cannot depend on the
/// thread count. The first exception thrown by any worker is rethrown.
void parallel_for(int n, int num_threads, const std::function<void(int)>& body);

}  // namespace comono
