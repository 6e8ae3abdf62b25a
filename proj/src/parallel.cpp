#include "jil/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace jil {

int worker_count() {
  int available = 1;
#ifdef _OPENMP
  available = omp_get_max_threads();
#endif
  if (const char* env = std::getenv("JIL_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap > 0 && cap < available) return cap;
    } catch (const std::exception&) {
      // malformed value: fall back to the runtime default
    }
  }
  return available;
}

}  // namespace jil
