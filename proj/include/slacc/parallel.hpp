#pragma once

#include <cstddef>
#include <functional>

namespace slacc {

/// Global worker count for parallel_for. 0 means "use all logical cores".
void set_thread_count(std::size_t n);
std::size_t thread_count();

/// Runs fn(i) for i in [begin, end) split into contiguous chunks across
/// worker threads. Each index is processed by exactly one thread, so any
/// computation whose output slots are disjoint per index is bitwise
/// deterministic regardless of the thread count.
void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& fn);

} // namespace slacc
