#pragma once

#include <cstdint>
#include <cmath>

namespace mfpca {

// Counter-based generator built on SplitMix64: the k-th draw for a given
// seed is a pure function of (seed, k), so streams can be split and
// replayed independently of call order.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : base_(mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ULL))) {}

    // Derive an independent substream (e.g. one per replicate).
    CounterRng split(std::uint64_t stream) const {
        CounterRng r(0);
        r.base_ = mix(base_ ^ mix(stream + 0xbf58476d1ce4e5b9ULL));
        r.counter_ = 0;
        return r;
    }

    std::uint64_t nextU64() { return mix(base_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

    // Uniform on (0,1), never exactly 0 or 1.
    double uniform() {
        return (static_cast<double>(nextU64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; one value per call, spare cached.
    double normal() {
        if (haveSpare_) {
            haveSpare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        haveSpare_ = true;
        return r * std::cos(a);
    }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return nextU64() % n; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t base_;
    std::uint64_t counter_ = 0;
    bool haveSpare_ = false;
    double spare_ = 0.0;
};

}  // namespace mfpca
