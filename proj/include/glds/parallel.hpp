#pragma once

#include <cstdint>
#include <omp.h>

namespace glds {

/// Number of worker threads the parallel kernels will use (0 = keep current).
inline void set_thread_count(int n) {
  if (n > 0) omp_set_num_threads(n);
}

inline int thread_count() { return omp_get_max_threads(); }

/// Runs f(i) for i in [0, n). `parallel` toggles the OpenMP region; the
/// serial path executes the identical body, so results are bit-identical.
template <typename F>
void for_each_index(std::int64_t n, bool parallel, F&& f) {
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::int64_t i = 0; i < n; ++i) {
    f(i);
  }
}

}  // namespace glds
