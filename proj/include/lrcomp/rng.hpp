#ifndef LRCOMP_RNG_HPP
#define LRCOMP_RNG_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

/**
 * @file rng.hpp
 *
 * @brief Portable random streams.
 *
 * The engine is `std::mt19937_64`, whose output sequence is fixed by the C++ standard.
 * The distributions in `<random>` are not (their algorithms differ between standard libraries),
 * so every variate used by the simulation is derived here from raw 64-bit draws.
 * Given a seed, results therefore do not depend on the standard library in use.
 *
 * Independent streams are keyed by `derive_seed(base, {tag, ...})`, which folds each tag
 * into the base seed with the SplitMix64 finalizer.
 */

namespace lrcomp {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t s = splitmix64(base);
    for (auto t : tags) {
        s = splitmix64(s ^ splitmix64(t + 0x632be59bd9b4e019ULL));
    }
    return s;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Standard normal via Box-Muller; the second variate of each pair is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform();
        } while (u1 == 0);
        double u2 = uniform();
        double radius = std::sqrt(-2 * std::log(u1));
        double angle = 2 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    bool bernoulli(double prob) { return uniform() < prob; }

    /// Uniform integer in [0, n) by rejection, without modulo bias.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    /// Exact binomial draw by summing Bernoulli trials; cost is linear in `trials`.
    std::int64_t binomial(std::int64_t trials, double prob) {
        if (prob <= 0) {
            return 0;
        }
        if (prob >= 1) {
            return trials;
        }
        std::int64_t hits = 0;
        for (std::int64_t t = 0; t < trials; ++t) {
            hits += uniform() < prob;
        }
        return hits;
    }

    /**
     * Multinomial draw by sequential binomial conditioning: category `j` receives
     * `Binomial(remaining, prob_j / remaining_mass)`.
     */
    std::vector<std::int64_t> multinomial(std::int64_t trials, const std::vector<double>& probs) {
        std::vector<std::int64_t> out(probs.size(), 0);
        double mass = 0;
        for (double q : probs) {
            mass += q;
        }
        std::int64_t remaining = trials;
        for (std::size_t j = 0; j < probs.size() && remaining > 0; ++j) {
            if (j + 1 == probs.size()) {
                out[j] = remaining;
                break;
            }
            double cond = mass > 0 ? probs[j] / mass : 0;
            out[j] = binomial(remaining, std::min(cond, 1.0));
            remaining -= out[j];
            mass -= probs[j];
        }
        return out;
    }

    /// `k` distinct indices from [0, n), drawn by a partial Fisher-Yates shuffle, returned sorted.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
        std::vector<std::size_t> pool(n);
        for (std::size_t i = 0; i < n; ++i) {
            pool[i] = i;
        }
        for (std::size_t i = 0; i < k && i < n; ++i) {
            std::size_t j = i + static_cast<std::size_t>(below(n - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(std::min(k, n));
        std::sort(pool.begin(), pool.end());
        return pool;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0;
    bool has_spare_ = false;
};

}

#endif
