#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dycop {

// Execution policy of the data-parallel kernels. Serial is the reference
// implementation; OpenMP must produce bit-identical results because each
// loop index owns its output slot and its own derived RNG stream.
enum class Exec { serial, openmp };

// Worker cap shared by all kernels. 0 means "all hardware threads".
void set_max_threads(int n);
int max_threads();
Exec default_exec();

template <typename F>
void parallel_for(std::size_t n, F&& fn, Exec exec = default_exec()) {
#ifdef _OPENMP
  if (exec == Exec::openmp && max_threads() != 1 && n > 1) {
    const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic) num_threads(max_threads())
    for (long long i = 0; i < nn; ++i) fn(static_cast<std::size_t>(i));
    return;
  }
#endif
  (void)exec;
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

}  // namespace dycop
