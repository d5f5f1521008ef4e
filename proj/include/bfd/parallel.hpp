#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace bfd {

/// Worker count for the collision sweeps. Reads BFD_THREADS, falls back to
/// the hardware concurrency, and can be pinned with set_thread_count().
int thread_count();
void set_thread_count(int n);

/// Runs body(worker) for worker in [0, workers) on separate threads and joins.
/// Work splitting is the caller's job so results do not depend on timing.
void run_workers(int workers, const std::function<void(int)>& body);

/// Pairwise (cascade) summation in a fixed order.
double pairwise_sum(std::span<const double> xs);

}  // namespace bfd
