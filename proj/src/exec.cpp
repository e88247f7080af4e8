#include "umaircomp/exec.hpp"

#include <atomic>

namespace umaircomp {

namespace {
std::atomic<Exec> g_exec{Exec::parallel};
}

Exec default_exec() { return g_exec.load(std::memory_order_relaxed); }

void set_default_exec(Exec e) { g_exec.store(e, std::memory_order_relaxed); }

int worker_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

} // namespace umaircomp
