#pragma once

#include <cstddef>
#include <functional>

namespace thetarbm {

// Worker count used by parallel_for; 0 or 1 runs inline.
void set_thread_count(unsigned n);
unsigned thread_count();

// Calls fn(i) for every i in [0, n), splitting the range into contiguous
// chunks across threads. Callers write results into per-index slots and
// reduce afterwards in index order, which keeps outputs independent of the
// thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace thetarbm
