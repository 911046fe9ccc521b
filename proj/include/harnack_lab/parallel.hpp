#pragma once

// Worker-count control. Kernels that take an Exec argument run either the
// OpenMP path or the plain serial loop; both produce identical results.

namespace hlab {

enum class Exec { serial, parallel };

/// Workers used by Exec::parallel kernels. Defaults to HARNACK_LAB_THREADS,
/// or the number of available cores when unset.
int thread_count();
void set_thread_count(int n);

}  // namespace hlab
