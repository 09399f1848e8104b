#pragma once

// Data-parallel map used by the per-point kernels. Every kernel keeps a
// serial path; the two paths run the same per-item function, so their
// outputs are bit-identical and the serial one is the test reference.

#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace paracon {

enum class Exec { serial, parallel };

/// Worker cap from PARACON_THREADS (0 or unset = OpenMP default).
int configured_threads();

/// Applies PARACON_THREADS to the OpenMP runtime. Idempotent.
void apply_thread_limit();

/// out[i] = fn(i) for i in [0, n). The first exception (lowest index) thrown
/// by any item is rethrown after the loop.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, Fn&& fn, Exec exec) {
  std::vector<std::optional<T>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  const auto body = [&](std::size_t i) {
    try {
      slots[i].emplace(fn(i));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (exec == Exec::parallel && n > 1) {
    const long count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (long i = 0; i < count; ++i) body(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < n; ++i) body(i);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<T> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace paracon
