#pragma once

#include <cstddef>
#include <functional>

namespace picard
{

/// Run body(i) for i in [0, count) on up to `workers` threads.
///
/// Work items are claimed dynamically, so callers must write results to
/// per-index slots and reduce them afterwards in index order. The first
/// exception thrown by any item is rethrown on the calling thread.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& body);

/// Same, over contiguous chunks [begin, end) of roughly equal size.
void parallel_chunks(std::size_t count, std::size_t workers,
                     const std::function<void(std::size_t, std::size_t)>& body);

} // namespace picard
