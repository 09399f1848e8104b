#include "paracon/parallel.hpp"

#include <cstdlib>
#include <string>

namespace paracon {

int configured_threads() {
  const char* env = std::getenv("PARACON_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  try {
    const int n = std::stoi(env);
    return n > 0 ? n : 0;
  } catch (...) {
    return 0;
  }
}

void apply_thread_limit() {
#ifdef _OPENMP
  static std::once_flag once;
  std::call_once(once, [] {
    const int n = configured_threads();
    if (n > 0) omp_set_num_threads(n);
  });
#endif
}

}  // namespace paracon
