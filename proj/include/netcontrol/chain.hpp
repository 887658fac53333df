#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "netcontrol/coalition.hpp"
#include "netcontrol/error.hpp"

namespace netcontrol {

/// Monte Carlo schedule shared by the index and flow engines. `iterations`
/// and `burn_in` are per chain; only iterations t > burn_in are counted.
struct ChainSchedule {
    std::uint64_t iterations = 10'000;
    std::uint64_t burn_in = 1'000;
    std::uint32_t chains = 4;
    std::uint64_t seed = 1;

    static ChainSchedule with_default_burn_in(std::uint64_t iterations, std::uint32_t chains = 4,
                                              std::uint64_t seed = 1) {
        return {iterations, iterations / 10, chains, seed};
    }

    void validate() const {
        if (iterations == 0) throw Error(ErrorCode::InvalidConfig, "iterations must be positive");
        if (burn_in >= iterations) {
            throw Error(ErrorCode::InvalidConfig, "burn-in must be smaller than iterations");
        }
        if (chains == 0) throw Error(ErrorCode::InvalidConfig, "chains must be positive");
    }

    std::uint64_t counted_per_chain() const noexcept { return iterations - burn_in; }
};

/// Runs one chain from the identity map, calling `visit(map)` for every
/// counted iteration. Chain c draws from RngStream(seed, c).
template <class Visitor>
void run_control_chain(const OwnershipGraph& g, const ChainSchedule& schedule,
                       std::uint32_t chain, Visitor&& visit) {
    RngStream rng(schedule.seed, chain);
    ControlSampler sampler(g);
    ControlMap prior = ControlMap::identity(g.size());
    ControlMap current;
    for (std::uint64_t t = 1; t <= schedule.iterations; ++t) {
        sampler.draw(prior, rng, current);
        if (t > schedule.burn_in) visit(static_cast<const ControlMap&>(current));
        std::swap(prior, current);
    }
}

/// Worker count from NETCONTROL_THREADS (0 or unset = hardware concurrency).
inline unsigned worker_count_from_env() {
    unsigned requested = 0;
    if (const char* env = std::getenv("NETCONTROL_THREADS")) {
        requested = static_cast<unsigned>(std::strtoul(env, nullptr, 10));
    }
    if (requested == 0) requested = std::max(1u, std::thread::hardware_concurrency());
    return requested;
}

/// Calls task(i) for i in [0, count) on up to `workers` threads. Tasks write
/// only to their own slot, so results never depend on scheduling.
template <class Task>
void parallel_for(std::size_t count, unsigned workers, Task&& task) {
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(count)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::vector<std::exception_ptr> errors(count);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += workers) {
                try {
                    task(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

} // namespace netcontrol
