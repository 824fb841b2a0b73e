#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace drumscribe {

/// splitmix64 mixing step; used to derive independent child seeds.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic child seed from (master, a, b), e.g. (dataset seed, class, file index).
inline uint64_t derive_seed(uint64_t master, uint64_t a, uint64_t b = 0) {
    return splitmix64(splitmix64(splitmix64(master) ^ a) ^ b);
}

/// Deterministic random source. mt19937_64 is pinned by the standard; the
/// distribution transforms here are hand-rolled because the std::*_distribution
/// classes are implementation-defined and would break cross-platform
/// reproducibility of datasets and training runs.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi] inclusive.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int64_t>(eng_() % span);
    }

    /// Standard normal via Box-Muller, one spare cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 == 0.0) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Normal(0, stddev) rejected outside +-cut*stddev.
    double truncated_normal(double stddev, double cut = 2.0) {
        double x = normal();
        while (std::abs(x) > cut) x = normal();
        return stddev * x;
    }

    /// Fisher-Yates; std::shuffle is implementation-defined, this is not.
    template <typename It>
    void shuffle(It begin, It end) {
        int64_t n = end - begin;
        for (int64_t i = n - 1; i > 0; --i) {
            int64_t j = uniform_int(0, i);
            std::swap(begin[i], begin[j]);
        }
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace drumscribe
