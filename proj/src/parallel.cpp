#include "harnack_lab/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hlab {

namespace {

int default_threads() {
  if (const char* env = std::getenv("HARNACK_LAB_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
#ifdef _OPENMP
  return omp_get_num_procs();
#else
  return 1;
#endif
}

int& threads() {
  static int n = default_threads();
  return n;
}

}  // namespace

int thread_count() { return threads(); }

void set_thread_count(int n) {
  if (n > 0) threads() = n;
}

}  // namespace hlab
