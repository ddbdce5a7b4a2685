#include "ehinet/parallel.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ehinet::par {

namespace {
std::atomic<int> g_thread_cap{0};  // 0 = library default
}

int max_threads() {
  int cap = g_thread_cap.load();
  if (cap >= 1) return cap;
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) { g_thread_cap.store(n < 1 ? 0 : n); }

int resolve_threads(int requested) {
  int cap = max_threads();
  if (requested < 1) return cap;
  return requested < cap ? requested : cap;
}

namespace detail {

void run_parallel(std::int64_t n, void* ctx, void (*body)(void*, std::int64_t),
                  int threads) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::int64_t i = 0; i < n; ++i) body(ctx, i);
#else
  (void)threads;
  for (std::int64_t i = 0; i < n; ++i) body(ctx, i);
#endif
}

}  // namespace detail
}  // namespace ehinet::par
