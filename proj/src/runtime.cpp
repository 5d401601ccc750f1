#include "dcnn/runtime.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dcnn::runtime {

namespace {
std::atomic<Mode> g_mode{Mode::parallel};
std::atomic<int> g_threads{0};
}  // namespace

Mode mode() { return g_mode.load(std::memory_order_relaxed); }

void set_mode(Mode m) { g_mode.store(m, std::memory_order_relaxed); }

int threads() { return g_threads.load(std::memory_order_relaxed); }

void set_threads(int n) {
    g_threads.store(n < 0 ? 0 : n, std::memory_order_relaxed);
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#endif
}

bool parallel_enabled() {
#ifdef _OPENMP
    return mode() == Mode::parallel;
#else
    return false;
#endif
}

bool parallel_kernels() {
#ifdef _OPENMP
    return mode() == Mode::parallel && omp_in_parallel() == 0;
#else
    return false;
#endif
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace dcnn::runtime
