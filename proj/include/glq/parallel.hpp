#pragma once

#include <cstdint>
#include <functional>

namespace glq::par {

// Thread count used by all parallel loops. Resolution order:
// explicit set_threads() > GLQ_THREADS env var > OpenMP default.
int threads();
void set_threads(int n);

// Parallel loop over [0, n). No reductions inside; results written by index,
// so the outcome is independent of the thread count.
void for_index(std::int64_t n, const std::function<void(std::int64_t)>& body);

// Deterministic sum: partial sums are computed per slab (a fixed data
// partition independent of the thread count) and combined in slab order.
// Bitwise-identical result for any thread count.
double sum_slabs(std::int64_t nslabs, const std::function<double(std::int64_t)>& slab_sum);

// Deterministic max over slabs.
double max_slabs(std::int64_t nslabs, const std::function<double(std::int64_t)>& slab_max);

}  // namespace glq::par
