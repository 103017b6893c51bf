#pragma once

#include <cstdint>
#include <random>

namespace pmdtk {

/// SplitMix64 finalizer. Used to decorrelate seeds that differ in few bits
/// and to derive independent per-realization streams from (master, index).
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_stream(std::uint64_t master, std::uint64_t index) {
    return mix_seed(master ^ mix_seed(index));
}

/// Deterministic uniform double in [0, 1). Avoids std::uniform_real_distribution,
/// whose output is not pinned down by the standard; we need byte-identical
/// results for a given seed on any platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(mix_seed(seed)) {}

    double uniform01() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

private:
    std::mt19937_64 gen_;
};

} // namespace pmdtk
