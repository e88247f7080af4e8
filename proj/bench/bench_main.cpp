// Serial-vs-OpenMP kernel comparison for the two optimizers and the
// federated replica runner. Median of five timed repeats after one warm-up.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "umaircomp/agp.hpp"
#include "umaircomp/exec.hpp"
#include "umaircomp/fl.hpp"

using namespace umaircomp;
using Clock = std::chrono::steady_clock;

namespace {

double time_median_ms(const std::function<void()>& fn) {
    fn();  // warm-up
    std::vector<double> ms;
    for (int rep = 0; rep < 5; ++rep) {
        const auto t0 = Clock::now();
        fn();
        ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    }
    std::sort(ms.begin(), ms.end());
    return ms[2];
}

void row(const char* name, const std::function<void()>& fn) {
    set_default_exec(Exec::serial);
    const double serial = time_median_ms(fn);
    set_default_exec(Exec::parallel);
    const double parallel = time_median_ms(fn);
    std::printf("%-34s %10.2f ms %10.2f ms %8.2fx\n", name, serial, parallel,
                serial / parallel);
}

} // namespace

int main() {
    std::printf("umaircomp kernel bench (%d worker threads)\n", worker_count());
    std::printf("%-34s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

    {
        const SystemConfig cfg = SystemConfig::uniform(32, 8, 0.01, 1e-11, 1e-11, 1e-6, 16);
        const ChannelSet ch = generate_channels(cfg, 1);
        pam::PamOptions opts;
        opts.outer_iters = 2;
        opts.inner_f_iters = 40;
        opts.inner_t_iters = 40;
        row("pam_solve N=32 K=8", [&] { pam::pam_solve(ch, cfg, opts); });
    }
    {
        const SystemConfig cfg = SystemConfig::uniform(64, 8, 0.01, 1e-11, 1e-11, 1e-6, 16);
        const ChannelSet ch = generate_channels(cfg, 2);
        pam::PamOptions opts;
        opts.outer_iters = 1;
        opts.inner_f_iters = 30;
        opts.inner_t_iters = 30;
        row("pam_solve N=64 K=8", [&] { pam::pam_solve(ch, cfg, opts); });
    }
    {
        const SystemConfig cfg = SystemConfig::uniform(128, 4, 1.0, 1e-12, 1e-12, 1.0, 16);
        const ChannelSet ch = generate_channels(cfg, 3);
        agp::AgpOptions opts;
        row("agp_solve N=128 K=4", [&] { agp::agp_solve(ch, cfg, opts); });
    }
    {
        const SystemConfig cfg = SystemConfig::uniform(256, 4, 1.0, 1e-12, 1e-12, 1.0, 16);
        const ChannelSet ch = generate_channels(cfg, 4);
        agp::AgpOptions opts;
        row("agp_solve N=256 K=4", [&] { agp::agp_solve(ch, cfg, opts); });
    }
    {
        const SystemConfig cfg = SystemConfig::uniform(4, 4, 0.01, 1e-9, 1e-9, 1e-3, 32);
        const fl::QuadraticTask task = fl::make_quadratic_task(4, 64, 120, 0.5, 0.3, 5);
        baselines::SchemeOptions sopts;
        sopts.pam.outer_iters = 2;
        sopts.pam.inner_f_iters = 20;
        sopts.pam.inner_t_iters = 20;
        fl::FlOptions fopts;
        fopts.rounds = 3;
        fopts.schedule = fl::StepSchedule::constant_step(1.0 / task.smoothness);
        row("fl 256 replicas R=3 K=4", [&] {
            fl::run_federated_replicas(task, cfg, "pam", sopts, fopts, 7, 256);
        });
    }
    return 0;
}
