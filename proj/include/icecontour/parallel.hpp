#pragma once

#include <cstddef>
#include <cstdint>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace icecontour::par {

inline int max_threads() {
#if defined(_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline void set_threads(int n) {
#if defined(_OPENMP)
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

// Runs body(i) for i in [0, n). Bodies must write disjoint outputs; no
// floating-point reduction happens here, so results match the serial loop
// bit for bit regardless of thread count.
template <class F>
void parallel_for(std::size_t n, F&& body) {
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
        body(static_cast<std::size_t>(i));
#else
    for (std::size_t i = 0; i < n; ++i) body(i);
#endif
}

// Serial reference path, kept so tests can pin parallel == serial.
template <class F>
void serial_for(std::size_t n, F&& body) {
    for (std::size_t i = 0; i < n; ++i) body(i);
}

} // namespace icecontour::par
