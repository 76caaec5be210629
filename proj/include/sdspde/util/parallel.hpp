#pragma once

#include <functional>

namespace sdspde {

/// Worker count for per-path loops: SELFDUAL_SPDE_WORKERS if set, else the hardware
/// concurrency. Results never depend on it.
int worker_count();

/// Calls body(i) for i in [0, n). Bodies must only write to slot i of their
/// outputs; reductions happen afterwards in index order. The first exception
/// thrown by a body is rethrown.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace sdspde
