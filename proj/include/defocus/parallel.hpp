#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace defocus {

/// Concurrency knob shared by the parallel kernels. `workers <= 0` uses the
/// OpenMP default; `workers == 1` runs on the calling thread. Results never
/// depend on the worker count: every row is computed by exactly one thread
/// with a fixed summation order.
struct Execution {
  int workers = 0;
};

inline int resolved_workers(Execution exec) {
#ifdef _OPENMP
  return exec.workers > 0 ? exec.workers : omp_get_max_threads();
#else
  (void)exec;
  return 1;
#endif
}

/// Calls `body(y)` for y in [0, rows) across workers. `body` must not throw.
template <typename Body>
void parallel_rows(int rows, Execution exec, Body&& body) {
  const int workers = resolved_workers(exec);
#pragma omp parallel for schedule(dynamic, 4) num_threads(workers) if (workers > 1)
  for (int y = 0; y < rows; ++y) body(y);
}

}  // namespace defocus
