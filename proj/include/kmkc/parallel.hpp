#pragma once

#include <cstddef>
#include <functional>

namespace kmkc {

/// Worker count used by the data-parallel kernels. 1 (the default) is
/// sequential mode, which is the reproducibility reference.
void set_thread_count(unsigned threads);
[[nodiscard]] unsigned thread_count() noexcept;

/// Split [0, n) into contiguous chunks of at least `grain` items and run
/// `body(begin, end)` on each, using up to thread_count() threads.
/// Exceptions thrown by a chunk are rethrown on the calling thread.
void parallel_for(std::size_t n, std::size_t grain, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace kmkc
