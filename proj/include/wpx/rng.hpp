#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <span>
#include <utility>

namespace wpx {

/// Named purposes for stream splitting. Every random draw in the repo comes
/// from a stream keyed by (seed, purpose, ids...), so results do not depend on
/// the order in which events are processed.
enum class Stream : std::uint64_t {
    World = 1,
    Event = 2,
    Eligibility = 3,
    Session = 4,
    LongTerm = 5,
    Thompson = 6,
    Warmup = 7,
    Retrain = 8,
    Holdout = 9,
    Split = 10,
    Folds = 11,
    Bootstrap = 12,
    Panel = 13,
    Test = 99,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// xoshiro256++ with splitmix64 seeding. Satisfies UniformRandomBitGenerator.
/// Distributions are implemented here rather than taken from <random> because
/// the standard distributions are implementation-defined, and simulated event
/// streams must match across standard libraries.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) noexcept { reseed(seed); }

    /// Child stream keyed by (seed, purpose, ids...).
    static Rng stream(std::uint64_t seed, Stream purpose,
                      std::initializer_list<std::uint64_t> ids = {}) noexcept {
        std::uint64_t h = seed ^ 0x6a09e667f3bcc909ULL;
        std::uint64_t key = splitmix64(h) ^ static_cast<std::uint64_t>(purpose);
        for (std::uint64_t id : ids) {
            std::uint64_t s = key ^ (id * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL);
            key = splitmix64(s);
        }
        return Rng(key);
    }

    /// Deterministic child derived from the current state without advancing it.
    Rng split(std::uint64_t key) const noexcept {
        std::uint64_t s = s_[0] ^ std::rotl(s_[3], 17) ^ (key * 0xd1342543de82ef95ULL);
        return Rng(splitmix64(s));
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        const std::uint64_t result = std::rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = std::rotl(s_[3], 45);
        return result;
    }

    /// Uniform on [0, 1).
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer on [0, n). Lemire's multiply-shift with rejection.
    std::uint64_t below(std::uint64_t n) noexcept {
        if (n == 0) return 0;
        __uint128_t m = static_cast<__uint128_t>((*this)()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                m = static_cast<__uint128_t>((*this)()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Standard normal via Box-Muller (no cached second variate, so every call
    /// consumes exactly two words).
    double normal() noexcept {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

    template <class T>
    void shuffle(std::span<T> values) noexcept {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    void reseed(std::uint64_t seed) noexcept {
        std::uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64(sm);
    }

    std::uint64_t s_[4]{};
};

inline double standard_normal_cdf(double x) noexcept {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

inline double standard_normal_pdf(double x) noexcept {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace wpx
