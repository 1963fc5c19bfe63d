// marginlm/parallel.h
//
// Deterministic worker pool. Work items write to caller-owned slots and
// any reduction happens afterwards in index order, so the thread count
// (MARGINLM_THREADS) can never change a numerical result.

#ifndef MARGINLM_PARALLEL_H_
#define MARGINLM_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace marginlm {

// Worker count: MARGINLM_THREADS if set (clamped to [1, 64]), else the
// hardware concurrency.
int WorkerCount();

// Runs fn(i) for i in [0, n), distributing indices over workers. fn must
// only write to state owned by index i.
void ParallelFor(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace marginlm

#endif  // MARGINLM_PARALLEL_H_
