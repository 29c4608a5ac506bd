#pragma once

#include <cstddef>
#include <functional>

namespace hccstage {

/// Runs fn(0..n-1) on up to `threads` workers (0 = hardware concurrency).
/// Each index must write only its own output slot. Calls made from inside a
/// worker run serially, so nested loops never oversubscribe. The first
/// exception thrown (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned threads = 0);

/// Process-wide default used when `threads` is 0; 0 restores hardware concurrency.
void set_default_threads(unsigned threads) noexcept;

}  // namespace hccstage
