// exec.hpp - execution policy for data-parallel kernels
//
// Every parallelizable loop in this library writes per-index results into
// disjoint slots and performs no cross-index reductions inside the parallel
// region, so results are bitwise identical between serial and parallel
// execution. Tests assert this; the bench target measures the speedup.

#pragma once

#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace umaircomp {

enum class Exec { serial, parallel };

Exec default_exec();
void set_default_exec(Exec e);

// Number of worker threads a parallel loop would use (1 without OpenMP).
int worker_count();

// Forking a region costs a few microseconds; below this much total work
// (roughly flops) the serial loop wins.
inline constexpr double kParallelWorkThreshold = 256.0 * 1024.0;

// Exceptions may not escape an OpenMP region; the first one thrown is
// captured and rethrown after the join. Nested calls inside an active
// parallel region run serially (nesting is never profitable here).
template <typename F>
void par_for(Exec ex, int n, F&& body) {
#ifdef _OPENMP
    if (ex == Exec::parallel && n > 1 && !omp_in_parallel()) {
        std::exception_ptr error;
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) {
            try {
                body(i);
            } catch (...) {
#pragma omp critical(umaircomp_par_for_error)
                if (!error) error = std::current_exception();
            }
        }
        if (error) std::rethrow_exception(error);
        return;
    }
#endif
    (void)ex;
    for (int i = 0; i < n; ++i) {
        body(i);
    }
}

template <typename F>
void par_for(int n, F&& body) {
    par_for(default_exec(), n, body);
}

// Hinted variant: stays serial when n * work_per_item is too small to pay
// for the fork/join.
template <typename F>
void par_for_work(Exec ex, int n, double work_per_item, F&& body) {
    if (work_per_item * n < kParallelWorkThreshold) ex = Exec::serial;
    par_for(ex, n, body);
}

template <typename F>
void par_for_work(int n, double work_per_item, F&& body) {
    par_for_work(default_exec(), n, work_per_item, body);
}

} // namespace umaircomp
