#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace crg {

using Rng = std::mt19937_64;

struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// splitmix64 finalizer applied to (master, index); replica i always receives
// split_seed(master, i) no matter how replicas are scheduled on threads.
inline std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t master, std::uint64_t index) {
    return Rng(split_seed(master, index));
}

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// uniform on the open interval (0,1)
inline double uniform_open(Rng& rng) {
    double u;
    do {
        u = uniform01(rng);
    } while (u <= 0.0);
    return u;
}

inline double exponential(Rng& rng, double rate) {
    return -std::log(uniform_open(rng)) / rate;
}

// Runs fn(i) for i in [0, count). Work is split in contiguous blocks, so any
// result written to slot i is independent of the thread count.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    if (threads <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    std::size_t block = (count + threads - 1) / threads;
    for (unsigned k = 0; k < threads; ++k) {
        std::size_t lo = k * block, hi = std::min(count, lo + block);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, k, &fn, &errors] {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace crg
