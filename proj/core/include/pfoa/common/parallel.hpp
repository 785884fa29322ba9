#pragma once

#include <cstddef>
#include <functional>

namespace pfoa {

/// Process-wide worker count used by parallel_for. Defaults to the hardware
/// concurrency; the CLI exposes it as --threads. 1 disables threading.
void set_thread_count(int n);
int thread_count();

/// Runs fn(i) for i in [0, n). Work is split into contiguous index ranges so
/// a caller that writes only to slot i (or reduces per-index buffers in index
/// order afterwards) gets results independent of the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace pfoa
