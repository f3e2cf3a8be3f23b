#pragma once

#include <cstddef>
#include <functional>

namespace pmltm {

/// Calls body(begin, end) over contiguous blocks covering [0, count) using
/// up to `threads` workers. Block boundaries do not depend on the thread
/// count, so per-index results are identical for any worker count.
void parallelFor(std::size_t count, int threads,
                 const std::function<void(std::size_t, std::size_t)>& body);

/// Default worker count when a caller passes 0.
int hardwareThreads();

}  // namespace pmltm
