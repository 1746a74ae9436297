#ifndef LRCOMP_TUNING_HPP
#define LRCOMP_TUNING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "estimators.hpp"
#include "metrics.hpp"
#include "optimizer.hpp"
#include "parallel.hpp"
#include "rng.hpp"

/**
 * @file tuning.hpp
 *
 * @brief Cross-validated selection of `(lambda, alpha_x)` for the regularized estimator.
 *
 * Each of `L` splits draws `floor((K-1) n / K)` complete training rows. Every remaining (held)
 * row keeps `floor((K-1) p / K)` randomly chosen columns for training; the other entries are
 * zeroed. The fit on the masked counts is scored against the full-data row-normalized counts
 * (the MLE) on the held rows, in one of two ways:
 *
 * - `CvScore::held_out` (default): KL divergence between the MLE and the fit, both restricted to
 *   the masked columns of the row and renormalized there. Only entries the fit never saw are scored.
 * - `CvScore::full_row`: KL divergence over the whole held row. Most of those columns were also
 *   used for fitting, so this score rewards reproducing the sampling noise of the MLE and tends to
 *   select the smallest lambda on the grid.
 */

namespace lrcomp {

enum class CvScore { held_out, full_row };

inline std::string to_string(CvScore score) {
    return score == CvScore::held_out ? "held-out" : "full-row";
}

inline CvScore parse_cv_score(const std::string& name) {
    if (name == "held-out") {
        return CvScore::held_out;
    }
    if (name == "full-row") {
        return CvScore::full_row;
    }
    throw ConfigError("unknown CV score '" + name + "' (expected held-out or full-row)");
}

struct TuningGrid {
    std::vector<double> lambdas;
    std::vector<double> alphas;
};

inline const std::vector<double>& default_alpha_grid() {
    static const std::vector<double> grid{0.01, 0.05, 0.1, 0.5};
    return grid;
}

/// Log-spaced values from `low` to `high` inclusive.
inline std::vector<double> log_spaced(double low, double high, int count) {
    if (count < 1 || !(low > 0) || !(high >= low)) {
        throw ConfigError("log-spaced grid needs count >= 1 and 0 < low <= high");
    }
    std::vector<double> out;
    if (count == 1) {
        out.push_back(low);
        return out;
    }
    const double step = std::log(high / low) / (count - 1);
    for (int i = 0; i < count; ++i) {
        out.push_back(low * std::exp(step * i));
    }
    return out;
}

/**
 * Default grid: `count` log-spaced lambdas over `[c / 100, 10 c]` where `c` is `default_lambda()`
 * at `alpha_x = 1`, crossed with `alphas`.
 */
inline TuningGrid default_tuning_grid(const CountMatrix& w, int count = 8,
                                      const std::vector<double>& alphas = default_alpha_grid()) {
    const double center = default_lambda(w, SimplexBounds{1, static_cast<double>(w.p())});
    return TuningGrid{log_spaced(center / 100, center * 10, count), alphas};
}

/**
 * @brief One random train/held partition.
 *
 * `kept_columns[h]` lists the training columns of `held_rows[h]`. All index lists are sorted.
 */
struct CvSplit {
    std::vector<Index> train_rows;
    std::vector<Index> held_rows;
    std::vector<std::vector<Index>> kept_columns;
};

struct CvPlan {
    int k_folds = 5;
    int n_splits = 5;
    TuningGrid grid;
    CvScore score = CvScore::held_out;
    std::uint64_t seed = 0;
    Index n = 0;
    Index p = 0;
    std::vector<CvSplit> splits;

    /// Boolean training mask of split `l`, true on entries used for fitting.
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask(std::size_t l) const {
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> m = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, p, false);
        const CvSplit& s = splits.at(l);
        for (Index i : s.train_rows) {
            m.row(i).setConstant(true);
        }
        for (std::size_t h = 0; h < s.held_rows.size(); ++h) {
            for (Index j : s.kept_columns[h]) {
                m(s.held_rows[h], j) = true;
            }
        }
        return m;
    }

    /// Counts with every entry outside the training mask of split `l` set to zero.
    CountMatrix training_counts(const CountMatrix& w, std::size_t l) const {
        auto m = mask(l);
        Matrix values = w.values();
        for (Index j = 0; j < p; ++j) {
            for (Index i = 0; i < n; ++i) {
                if (!m(i, j)) {
                    values(i, j) = 0;
                }
            }
        }
        return CountMatrix(std::move(values));
    }
};

namespace detail {

inline std::vector<double> sorted_unique(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}

/**
 * Draws the splits. Deterministic in `seed`; split `l` uses its own derived stream.
 * Grids are sorted and deduplicated.
 *
 * Throws `ConfigError` if `k_folds < 2`, `k_folds > n`, `n_splits < 0` or a grid is empty or invalid.
 */
inline CvPlan make_cv_plan(const CountMatrix& w, int k_folds, int n_splits, const TuningGrid& grid, std::uint64_t seed,
                           CvScore score = CvScore::held_out) {
    if (k_folds < 2) {
        throw ConfigError("k_folds must be at least 2");
    }
    if (k_folds > w.n()) {
        throw ConfigError("k_folds (" + std::to_string(k_folds) + ") exceeds the number of samples (" + std::to_string(w.n()) + ")");
    }
    if (n_splits < 0) {
        throw ConfigError("number of splits must be nonnegative");
    }
    if (grid.lambdas.empty() || grid.alphas.empty()) {
        throw ConfigError("tuning grids must be nonempty");
    }
    for (double l : grid.lambdas) {
        if (!(l >= 0) || !std::isfinite(l)) {
            throw ConfigError("lambda grid values must be finite and nonnegative");
        }
    }
    for (double a : grid.alphas) {
        if (!(a > 0) || a > 1) {
            throw ConfigError("alpha_x grid values must lie in (0, 1]");
        }
    }

    CvPlan plan;
    plan.k_folds = k_folds;
    plan.n_splits = n_splits;
    plan.grid = TuningGrid{detail::sorted_unique(grid.lambdas), detail::sorted_unique(grid.alphas)};
    plan.seed = seed;
    plan.score = score;
    plan.n = w.n();
    plan.p = w.p();

    const auto n = static_cast<std::size_t>(w.n());
    const auto p = static_cast<std::size_t>(w.p());
    const auto k = static_cast<std::size_t>(k_folds);
    const std::size_t n_train = (k - 1) * n / k;
    const std::size_t p_kept = (k - 1) * p / k;

    for (int l = 0; l < n_splits; ++l) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(l)}));
        CvSplit split;
        auto train = rng.sample_without_replacement(n, n_train);
        std::vector<bool> is_train(n, false);
        for (auto i : train) {
            is_train[i] = true;
            split.train_rows.push_back(static_cast<Index>(i));
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!is_train[i]) {
                split.held_rows.push_back(static_cast<Index>(i));
                auto cols = rng.sample_without_replacement(p, p_kept);
                split.kept_columns.emplace_back(cols.begin(), cols.end());
            }
        }
        plan.splits.push_back(std::move(split));
    }
    return plan;
}

namespace detail {

/*
 * KL divergence between `reference` and `fitted` restricted to the columns where `trained` is false,
 * each renormalized over those columns. Zero when the reference has no mass there.
 */
template <typename RowA, typename RowB, typename Mask>
double held_out_kl(const RowA& reference, const RowB& fitted, const Mask& trained) {
    double ref_mass = 0, fit_mass = 0;
    for (Index j = 0; j < reference.size(); ++j) {
        if (!trained[j]) {
            ref_mass += reference[j];
            fit_mass += fitted[j];
        }
    }
    if (ref_mass == 0) {
        return 0;
    }
    double acc = 0;
    for (Index j = 0; j < reference.size(); ++j) {
        if (trained[j] || reference[j] == 0) {
            continue;
        }
        const double a = reference[j] / ref_mass;
        const double b = fitted[j] / fit_mass;
        if (!(b > 0)) {
            throw DomainError("held-out divergence is infinite at column " + std::to_string(j));
        }
        acc += a * std::log(a / b);
    }
    return acc;
}

}

/**
 * Cross-validated risk of `(lambda, alpha_x)`: over all splits, the summed divergence (see `CvScore`)
 * from the full-data MLE to the fit on the masked counts, over held rows.
 *
 * `base` supplies the optimizer settings; its lambda and bounds are overridden and zero-total
 * training rows start from the uniform row. Solver failures are rethrown with the split and grid point.
 */
inline double cv_risk(const CountMatrix& w, const CvPlan& plan, double lambda, double alpha_x, const SolverConfig& base = {}) {
    const CompositionMatrix reference = estimate_mle(w);
    SolverConfig cfg = base;
    cfg.lambda = lambda;
    cfg.bounds = SimplexBounds::lower_only(alpha_x, w.p());
    cfg.uniform_zero_rows = true;

    double risk = 0;
    for (std::size_t l = 0; l < plan.splits.size(); ++l) {
        const std::string where = " (split " + std::to_string(l) + ", lambda " + std::to_string(lambda) + ", alpha_x " + std::to_string(alpha_x) + ")";
        try {
            const auto mask = plan.mask(l);
            CountMatrix train = plan.training_counts(w, l);
            FitReport report = fit(train, cfg);
            const Matrix& fitted = report.estimate.values();
            for (Index i : plan.splits[l].held_rows) {
                if (plan.score == CvScore::full_row) {
                    risk += kl_row(reference.values().row(i), fitted.row(i));
                } else {
                    risk += detail::held_out_kl(reference.values().row(i), fitted.row(i), mask.row(i));
                }
            }
        } catch (const NumericalError& e) {
            throw NumericalError(e.what() + where);
        } catch (const DomainError& e) {
            throw DomainError(e.what() + where);
        }
    }
    return risk;
}

struct RiskEntry {
    double lambda = 0;
    double alpha_x = 0;
    double risk = 0;
};

struct TuningResult {
    double lambda = 0;
    double alpha_x = 0;
    double risk = 0;
    /// One entry per grid point, sorted by lambda then alpha_x.
    std::vector<RiskEntry> risk_table;
};

/// Grid argmin of a risk table; ties go to the smallest lambda, then the smallest alpha_x.
inline TuningResult argmin_risk(std::vector<RiskEntry> table) {
    if (table.empty()) {
        throw ConfigError("empty risk table");
    }
    std::sort(table.begin(), table.end(), [](const RiskEntry& a, const RiskEntry& b) {
        return a.lambda < b.lambda || (a.lambda == b.lambda && a.alpha_x < b.alpha_x);
    });
    std::size_t best = 0;
    for (std::size_t i = 1; i < table.size(); ++i) {
        if (table[i].risk < table[best].risk) {
            best = i;
        }
    }
    TuningResult out;
    out.lambda = table[best].lambda;
    out.alpha_x = table[best].alpha_x;
    out.risk = table[best].risk;
    out.risk_table = std::move(table);
    return out;
}

/**
 * Evaluates `cv_risk()` over the whole grid of `plan` (optionally on `jobs` threads) and returns the argmin.
 * The result does not depend on `jobs`.
 */
inline TuningResult select_tuning(const CountMatrix& w, const CvPlan& plan, const SolverConfig& base = {}, int jobs = 1) {
    std::vector<RiskEntry> table;
    for (double lambda : plan.grid.lambdas) {
        for (double alpha : plan.grid.alphas) {
            table.push_back(RiskEntry{lambda, alpha, 0});
        }
    }
    parallel_for(table.size(), jobs, [&](std::size_t i) {
        table[i].risk = cv_risk(w, plan, table[i].lambda, table[i].alpha_x, base);
    });
    return argmin_risk(std::move(table));
}

/// Tunes on `plan` and refits on the full counts at the selected point.
inline std::pair<TuningResult, FitReport> tune_and_fit(const CountMatrix& w, const CvPlan& plan, const SolverConfig& base = {}, int jobs = 1) {
    TuningResult tuning = select_tuning(w, plan, base, jobs);
    SolverConfig cfg = base;
    cfg.lambda = tuning.lambda;
    cfg.bounds = SimplexBounds::lower_only(tuning.alpha_x, w.p());
    return {std::move(tuning), fit(w, cfg)};
}

}

#endif
