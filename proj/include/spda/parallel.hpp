#pragma once

namespace spda {

// Thread cap for the OpenMP kernels. Resolution order: explicit
// set_max_threads() call, then the SPDA_THREADS environment variable, then
// omp_get_max_threads(). All kernels produce results that are bit-identical
// to the serial reference regardless of the thread count.
int max_threads();
void set_max_threads(int n);

}  // namespace spda
