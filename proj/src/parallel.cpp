#include "glq/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace glq::par {

namespace {
int g_threads = 0;  // 0 = unresolved

int resolve_threads() {
  if (g_threads > 0) return g_threads;
  if (const char* env = std::getenv("GLQ_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}
}  // namespace

int threads() { return resolve_threads(); }

void set_threads(int n) { g_threads = std::max(0, n); }

void for_index(std::int64_t n, const std::function<void(std::int64_t)>& body) {
#ifdef _OPENMP
  const int nt = resolve_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
  for (std::int64_t i = 0; i < n; ++i) body(i);
#else
  for (std::int64_t i = 0; i < n; ++i) body(i);
#endif
}

double sum_slabs(std::int64_t nslabs, const std::function<double(std::int64_t)>& slab_sum) {
  std::vector<double> partial(static_cast<std::size_t>(nslabs), 0.0);
  for_index(nslabs, [&](std::int64_t s) { partial[static_cast<std::size_t>(s)] = slab_sum(s); });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

double max_slabs(std::int64_t nslabs, const std::function<double(std::int64_t)>& slab_max) {
  std::vector<double> partial(static_cast<std::size_t>(nslabs),
                              -std::numeric_limits<double>::infinity());
  for_index(nslabs, [&](std::int64_t s) { partial[static_cast<std::size_t>(s)] = slab_max(s); });
  double best = -std::numeric_limits<double>::infinity();
  for (double p : partial) best = std::max(best, p);
  return best;
}

}  // namespace glq::par
