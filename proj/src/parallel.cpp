#include "spda/parallel.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>

namespace spda {

namespace {
int g_override = 0;
}

int max_threads() {
  if (g_override > 0) return g_override;
  if (const char* env = std::getenv("SPDA_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return std::min(n, omp_get_max_threads());
  }
  return omp_get_max_threads();
}

void set_max_threads(int n) { g_override = n > 0 ? n : 0; }

}  // namespace spda
