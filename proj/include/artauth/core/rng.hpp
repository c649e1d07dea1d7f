#pragma once

#include <cmath>
#include <cstdint>

namespace artauth::core {

// splitmix64 stream. Used everywhere randomness is needed so results are
// reproducible bit-for-bit across platforms (std:: distributions are not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    // Box-Muller, one sample per call.
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    // normal(0, sigma) with samples beyond 2 sigma rejected and redrawn
    double truncated_normal(double sigma) {
        for (;;) {
            const double z = normal();
            if (z >= -2.0 && z <= 2.0) return z * sigma;
        }
    }

    template <typename It>
    void shuffle(It first, It last) {
        const auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            const std::uint64_t j = below(i);
            std::swap(first[i - 1], first[j]);
        }
    }

    // Documented seed-splitting rule: sub-streams are one splitmix64 scramble
    // of (master ^ golden-ratio * stream-index).
    static std::uint64_t derive(std::uint64_t master, std::uint64_t stream) {
        Rng r(master ^ (0x9e3779b97f4a7c15ull * (stream + 1)));
        return r.next_u64();
    }

private:
    std::uint64_t state_;
};

// FNV-1a, for mixing architecture names into seeds.
inline std::uint64_t hash_str(const char* s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (; *s; ++s) h = (h ^ static_cast<unsigned char>(*s)) * 0x100000001b3ull;
    return h;
}

}  // namespace artauth::core
