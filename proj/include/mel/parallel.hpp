#pragma once

#include <cstdint>
#include <functional>

namespace mel::par {

// Worker-pool width used by quadratures, basis solves and sweep points.
// 1 guarantees serial execution.
int thread_count();
void set_thread_count(int n);

// body(i) for every i in [0, n), split across the pool.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body);

// Deterministic reduction: partial(i) is evaluated for every i (possibly in
// parallel) and the partials are summed in index order, so the result is
// independent of the thread count.
double ordered_sum(std::int64_t n, const std::function<double(std::int64_t)>& partial);

}  // namespace mel::par
