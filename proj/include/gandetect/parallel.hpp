#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace gandetect {

/// Default worker count: hardware concurrency, at least 1.
inline int default_workers() noexcept {
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

/// Runs `fn(lane)` for lane in [0, lanes), lane 0 on the calling thread.
/// The first exception (by lane order) is rethrown after every lane joined.
template <typename Fn>
void run_lanes(int lanes, Fn&& fn) {
    if (lanes <= 1) {
        fn(0);
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(lanes));
    {
        std::vector<std::jthread> threads;
        threads.reserve(static_cast<std::size_t>(lanes - 1));
        for (int lane = 1; lane < lanes; ++lane) {
            threads.emplace_back([&, lane] {
                try {
                    fn(lane);
                } catch (...) {
                    errors[static_cast<std::size_t>(lane)] = std::current_exception();
                }
            });
        }
        try {
            fn(0);
        } catch (...) {
            errors[0] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

/// Bounded pool over independent jobs: `fn(job)` for job in [0, jobs), jobs
/// handed out dynamically. Callers store results by job index so the output
/// order never depends on completion order.
template <typename Fn>
void parallel_jobs(std::size_t jobs, int workers, Fn&& fn) {
    const int lanes = static_cast<int>(std::min<std::size_t>(jobs, static_cast<std::size_t>(std::max(1, workers))));
    std::atomic<std::size_t> next{0};
    run_lanes(lanes, [&](int) {
        for (std::size_t job = next++; job < jobs; job = next++) fn(job);
    });
}

}  // namespace gandetect
