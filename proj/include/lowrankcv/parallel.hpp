#ifndef LOWRANKCV_PARALLEL_HPP
#define LOWRANKCV_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace lowrankcv {

/// Worker count from LOWRANKCV_THREADS, else the hardware concurrency (>= 1).
unsigned default_threads();

/**
 * Calls body(i) for every i in [0, count) on up to `threads` workers. Each
 * index is visited once; callers write results into slot i so the outcome
 * does not depend on scheduling. The exception thrown for the lowest index,
 * if any, is rethrown after all workers finish.
 */
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace lowrankcv

#endif  // LOWRANKCV_PARALLEL_HPP
