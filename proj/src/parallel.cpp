#include "lifecast/parallel.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace lifecast {

bool openmp_enabled() {
#if defined(_OPENMP)
  return true;
#else
  return false;
#endif
}

int max_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void parallel_for(Exec exec, std::size_t n, const std::function<void(std::size_t)>& body) {
#if defined(_OPENMP)
  if (exec == Exec::Parallel) {
    const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < nn; ++i) body(static_cast<std::size_t>(i));
    return;
  }
#else
  (void)exec;
#endif
  for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace lifecast
