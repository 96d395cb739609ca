#pragma once

#include <cstddef>
#include <functional>

namespace tortrust {

/// Worker count: hardware concurrency, capped by TORTRUST_THREADS when set.
std::size_t worker_count();

/// Runs body(i) for i in [0, n) across worker threads. Each index must write
/// only to its own output slot so the result is independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace tortrust
