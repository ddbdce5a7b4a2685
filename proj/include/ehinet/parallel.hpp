#pragma once

#include <cstdint>

namespace ehinet::par {

/// Number of worker threads used when a kernel is called with threads == 0.
/// Defaults to the OpenMP thread count (1 if built without OpenMP).
int max_threads();

/// Cap the global worker count (CLI --threads). Values < 1 reset to the
/// OpenMP default.
void set_threads(int n);

/// Resolve a per-call thread request against the global cap.
int resolve_threads(int requested);

namespace detail {
void run_parallel(std::int64_t n, void* ctx, void (*body)(void*, std::int64_t),
                  int threads);
}

/// Index-space loop over [0, n). threads == 1 takes a plain serial loop (the
/// reference path); otherwise iterations are distributed over OpenMP threads
/// with dynamic scheduling. Bodies must write only to per-index slots so the
/// result is identical for every thread count.
template <class F>
void parallel_for(std::int64_t n, F&& body, int threads = 0) {
  int t = resolve_threads(threads);
  if (t <= 1 || n <= 1) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  auto trampoline = [](void* ctx, std::int64_t i) { (*static_cast<F*>(ctx))(i); };
  detail::run_parallel(n, &body, trampoline, t);
}

}  // namespace ehinet::par
