#ifndef OODIL_PARALLEL_HPP_
#define OODIL_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace oodil {

// Global worker count. 1 disables the pool entirely. Overridable with the
// OODIL_THREADS environment variable (read once at startup).
int num_threads();
void set_num_threads(int n);

// Runs fn(begin, end) over a static partition of [0, n) across the worker
// pool. Blocks are contiguous and assigned by worker index, so any output
// computed from disjoint index ranges is bitwise identical to a sequential
// run regardless of the worker count.
void parallel_for(size_t n, const std::function<void(size_t, size_t)>& fn);

}  // namespace oodil

#endif  // OODIL_PARALLEL_HPP_
