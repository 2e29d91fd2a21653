#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace psrlab {

// Finalizer-style hash of (master, stream) into an independent seed. The
// harness keys every Monte Carlo task by a (purpose, cell, run) counter tuple
// chained through this function, so identical configs reproduce bit-identical
// output no matter how tasks are scheduled across threads.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// mt19937_64 plus hand-rolled output transforms. std::*_distribution is
// implementation-defined, so it is not used anywhere in this project; the
// engine and the transforms below are fully pinned by the standard, which
// keeps sampled values identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Standard normal, Box-Muller cosine branch (two uniforms per draw).
    double gaussian();

    // Unit-rate exponential.
    double exponential();

    // Inverse-CDF draw from a normalized probability vector. Tolerates
    // rounding in the total mass by falling back to the last positive entry.
    std::size_t categorical(std::span<const double> probs);

private:
    std::mt19937_64 gen_;
};

}  // namespace psrlab
