#ifndef LRCOMP_SIMULATION_HPP
#define LRCOMP_SIMULATION_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rng.hpp"
#include "types.hpp"

/**
 * @file simulation.hpp
 *
 * @brief Synthetic low-rank compositions and multinomial read counts.
 *
 * Truth: `Z = U V^T` with `U` (n x r) holding absolute standard normals and
 * `V = V1 + V2` (p x r), `V1` one on the diagonal and one with probability 0.3 elsewhere,
 * `V2` entrywise normal with variance 1e-3. Rows of `Z` are normalized; the draw is repeated
 * until every entry is strictly positive.
 *
 * Counts: sample shares `R_i = P_i / sum P` with `P_i ~ Uniform[1, 10]`, depths
 * `N_i = round(gamma * n * p * R_i)` (at least 1) and `W_i ~ Multinomial(N_i, X_i)`.
 */

namespace lrcomp {

struct SimScenario {
    Index n = 100;
    Index p = 50;
    Index r = 20;
    double gamma = 1;
    int replicates = 10;
    std::uint64_t seed = 20240501;

    void validate() const {
        if (n < 2 || p < 2) {
            throw ConfigError("scenario needs n >= 2 and p >= 2");
        }
        if (r < 1 || r > std::min(n, p)) {
            throw ConfigError("scenario rank must lie in [1, min(n, p)]");
        }
        if (!(gamma >= 1)) {
            throw ConfigError("scenario depth multiplier gamma must be at least 1");
        }
        if (replicates < 0) {
            throw ConfigError("replicate count must be nonnegative");
        }
    }

    /// The full-rank variant of this scenario.
    SimScenario full_rank() const {
        SimScenario s = *this;
        s.r = std::min(n, p);
        return s;
    }
};

/// Variance of the dense perturbation added to the loading pattern.
inline constexpr double loading_noise_variance = 1e-3;
/// Probability of an off-diagonal one in the loading pattern.
inline constexpr double loading_density = 0.3;
inline constexpr int max_generation_attempts = 100;

/**
 * @brief A generated truth together with its unnormalized factor product.
 */
struct GeneratedComposition {
    CompositionMatrix truth;
    Matrix factors;
    int attempts = 0;
};

/**
 * Draws a strictly positive composition matrix of rank at most `scenario.r` from the stream `seed`.
 * Throws `GenerationError` after `max_generation_attempts` failures.
 */
inline GeneratedComposition generate_composition_detailed(const SimScenario& scenario, std::uint64_t seed) {
    scenario.validate();
    Rng rng(seed);
    const Index n = scenario.n, p = scenario.p, r = scenario.r;
    const double sd = std::sqrt(loading_noise_variance);

    for (int attempt = 1; attempt <= max_generation_attempts; ++attempt) {
        Matrix u(n, r), v(p, r);
        for (Index j = 0; j < r; ++j) {
            for (Index i = 0; i < n; ++i) {
                u(i, j) = std::abs(rng.normal());
            }
        }
        for (Index j = 0; j < r; ++j) {
            for (Index i = 0; i < p; ++i) {
                double pattern = (i == j || rng.bernoulli(loading_density)) ? 1.0 : 0.0;
                v(i, j) = pattern + rng.normal(0, sd);
            }
        }
        Matrix z = u * v.transpose();
        Matrix x = z;
        bool positive = true;
        for (Index i = 0; i < n && positive; ++i) {
            double total = z.row(i).sum();
            if (!(total > 0)) {
                positive = false;
                break;
            }
            x.row(i) /= total;
            positive = (x.row(i).array() > 0).all();
        }
        if (positive) {
            return GeneratedComposition{CompositionMatrix(std::move(x)), std::move(z), attempt};
        }
    }
    throw GenerationError("no strictly positive composition after " + std::to_string(max_generation_attempts) + " attempts");
}

inline CompositionMatrix generate_composition(const SimScenario& scenario, std::uint64_t seed) {
    return generate_composition_detailed(scenario, seed).truth;
}

inline CompositionMatrix generate_composition(const SimScenario& scenario) {
    return generate_composition(scenario, scenario.seed);
}

/**
 * @brief Simulated counts with the depths that produced them.
 */
struct GeneratedCounts {
    CountMatrix counts;
    RowWeights shares;
    std::vector<std::int64_t> depths;
};

inline GeneratedCounts generate_counts_detailed(const CompositionMatrix& truth, double gamma, std::uint64_t seed) {
    if (!(gamma > 0)) {
        throw ConfigError("gamma must be positive");
    }
    Rng rng(seed);
    const Index n = truth.n(), p = truth.p();

    Vector raw(n);
    for (Index i = 0; i < n; ++i) {
        raw[i] = rng.uniform(1, 10);
    }
    RowWeights shares = RowWeights::from_unnormalized(raw);

    Matrix w(n, p);
    std::vector<std::int64_t> depths(static_cast<std::size_t>(n));
    std::vector<double> probs(static_cast<std::size_t>(p));
    for (Index i = 0; i < n; ++i) {
        double target = gamma * static_cast<double>(n) * static_cast<double>(p) * shares[i];
        auto depth = std::max<std::int64_t>(1, std::llround(target));
        depths[static_cast<std::size_t>(i)] = depth;
        for (Index j = 0; j < p; ++j) {
            probs[static_cast<std::size_t>(j)] = truth(i, j);
        }
        auto draw = rng.multinomial(depth, probs);
        for (Index j = 0; j < p; ++j) {
            w(i, j) = static_cast<double>(draw[static_cast<std::size_t>(j)]);
        }
    }
    return GeneratedCounts{CountMatrix(std::move(w)), std::move(shares), std::move(depths)};
}

/// Multinomial counts for `truth` with total depth about `gamma * n * p`.
inline CountMatrix generate_counts(const CompositionMatrix& truth, double gamma, std::uint64_t seed) {
    return generate_counts_detailed(truth, gamma, seed).counts;
}

}

#endif
