#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bprocova {

/// Serial execution is the reference path; the parallel path must produce
/// identical per-task results because every task owns a derived RNG stream.
enum class Execution { serial, parallel };

/// Runs body(i) for i in [0, n). The first exception thrown by any task is
/// rethrown on the calling thread after the loop completes.
template <class Body>
void for_each_index(std::size_t n, Execution ex, Body&& body) {
  if (ex == Execution::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) {
      body(i);
    }
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) {
        failure = std::current_exception();
      }
    }
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
}

inline void set_thread_count(int threads) {
#ifdef _OPENMP
  if (threads > 0) {
    omp_set_num_threads(threads);
  }
#else
  (void)threads;
#endif
}

}  // namespace bprocova
