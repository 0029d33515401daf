#pragma once

#include <algorithm>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace oclbcp {

// Applies the OCLBCP_THREADS cap to the OpenMP runtime. Call once at program
// start; ignores unset or malformed values.
inline void apply_thread_cap_from_env() {
#ifdef _OPENMP
    const char* s = std::getenv("OCLBCP_THREADS");
    if (!s) return;
    char* end = nullptr;
    long n = std::strtol(s, &end, 10);
    if (end == s || n < 1) return;
    omp_set_num_threads(static_cast<int>(std::min<long>(n, omp_get_max_threads())));
#endif
}

inline int worker_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace oclbcp
