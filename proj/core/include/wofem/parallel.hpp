#pragma once

#include <cstddef>
#include <functional>

namespace wofem {

/// Number of worker threads used by element/ball loops. Read once from the
/// WOFEM_NUM_THREADS environment variable; defaults to 1.
std::size_t thread_count();

/// Runs body(i) for i in [0, n). Each index must write only its own output
/// slot; reductions happen afterwards in index order, so results do not
/// depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace wofem
