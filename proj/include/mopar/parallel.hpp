#pragma once

#include <cstddef>
#include <functional>

namespace mopar {

/// Worker count for element loops: MP_THREADS if set and positive, otherwise
/// the number of hardware threads.
std::size_t worker_count();

/// Runs body(i) for i in [0, n). Iterations are split into contiguous chunks;
/// callers write into per-index slots so results do not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t serial_below = 2048);

}  // namespace mopar
