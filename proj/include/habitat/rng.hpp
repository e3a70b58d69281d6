#pragma once

#include <cstdint>
#include <random>
#include <vector>

// Deterministic random primitives. Everything here is fixed by algorithm,
// not by library implementation, so results are identical across platforms:
//  - mt19937_64 output is bit-exact per the C++ standard;
//  - bounded integers use rejection sampling (std::uniform_int_distribution
//    is implementation-defined and must not be used);
//  - counter_hash is the SplitMix64 finalizer over (seed, stream, counter),
//    giving order-independent per-element draws for parallel generation.

namespace habitat::rng {

/// Uniform integer in [0, bound) from a mt19937_64 stream, rejection sampled.
std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t bound);

/// Fisher-Yates shuffle driven by bounded(); deterministic in the seed.
template <typename T>
void shuffle(std::vector<T>& items, std::mt19937_64& gen) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(bounded(gen, i));
        std::swap(items[i - 1], items[j]);
    }
}

/// SplitMix64-style stateless hash of (seed, stream, counter).
std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

/// Uniform double in [0, 1) from the top 53 bits of a hash value.
double to_unit_double(std::uint64_t h);

/// Uniform double in [0, 1) for element `counter` of stream `stream`.
inline double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    return to_unit_double(counter_hash(seed, stream, counter));
}

} // namespace habitat::rng
