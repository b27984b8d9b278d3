#pragma once

#include <cstdint>
#include <random>

namespace mixdecon {

// SplitMix64 finalizer; used to derive independent task seeds from a master seed.
std::uint64_t splitmix64(std::uint64_t x);

// Counter-based seed for task (a, b) under `master`; independent of execution order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

// Deterministic generator with library-owned samplers (no std distributions,
// whose output is implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    double uniform();                       // [0, 1) with 53 random bits
    double uniform_open();                  // (0, 1)
    double uniform(double lo, double hi);
    double normal();                        // Box-Muller
    double exponential();                   // rate 1
    double laplace();                       // density exp(-|x|)/2
    double cauchy();

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace mixdecon
