#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace sepopt {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class OptMode { Max, Min };

inline const char* to_string(OptMode m) { return m == OptMode::Max ? "max" : "min"; }

/// Malformed or inconsistent input (bad dimensions, invalid values, parse failures).
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A configured resource cap would be exceeded; the message carries the cap and
/// the required amount so the caller can see how infeasible the request is.
class CapExceeded : public std::runtime_error {
public:
    CapExceeded(const std::string& msg, double required, double cap)
        : std::runtime_error(msg), required_(required), cap_(cap) {}
    double required() const { return required_; }
    double cap() const { return cap_; }

private:
    double required_;
    double cap_;
};

/// An eigen/SVD routine failed to converge.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Deterministic counter-based generator used everywhere randomness is needed.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed = 0) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    double uniform() {  // in [0, 1)
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double gaussian() {  // Box-Muller
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    Complex cgaussian() { return Complex(gaussian(), gaussian()); }
};

inline unsigned hardware_threads() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1u : n;
}

// Runs fn(block) for block = 0..n_blocks-1 on `threads` workers with dynamic
// scheduling. fn must be safe to call concurrently on distinct blocks.
template <class Fn>
void parallel_blocks(std::int64_t n_blocks, int threads, Fn&& fn) {
    if (threads <= 1 || n_blocks <= 1) {
        for (std::int64_t b = 0; b < n_blocks; ++b) fn(b);
        return;
    }
    std::atomic<std::int64_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::int64_t b = next.fetch_add(1);
            if (b >= n_blocks) break;
            fn(b);
        }
    };
    std::vector<std::thread> pool;
    int n = std::min<std::int64_t>(threads, n_blocks);
    pool.reserve(n);
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

inline std::uint64_t fnv1a_mix(std::uint64_t h, std::uint64_t x) {
    h ^= x;
    return h * 0x100000001b3ULL;
}

}  // namespace sepopt
