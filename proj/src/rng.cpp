#include "psrlab/rng.hpp"

#include <cmath>

#include "psrlab/errors.hpp"

namespace psrlab {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    // splitmix64 finalizer over master + (stream+1) * odd constant.
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double Rng::gaussian() {
    const double two_pi = 6.283185307179586476925286766559;
    double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

double Rng::exponential() {
    double u = 1.0 - uniform();
    return -std::log(u);
}

std::size_t Rng::categorical(std::span<const double> probs) {
    double u = uniform();
    double cum = 0.0;
    bool seen = false;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] > 0.0) {
            seen = true;
            last_positive = i;
            cum += probs[i];
            if (u < cum) return i;
        }
    }
    if (!seen) throw ValidationError("categorical draw from all-zero mass");
    return last_positive;
}

}  // namespace psrlab
