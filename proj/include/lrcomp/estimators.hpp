#ifndef LRCOMP_ESTIMATORS_HPP
#define LRCOMP_ESTIMATORS_HPP

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "optimizer.hpp"
#include "types.hpp"

/**
 * @file estimators.hpp
 *
 * @brief Composition estimators behind a common interface.
 *
 * - `mle`: plain row normalization of the counts.
 * - `zr`: zero counts replaced by 0.5 before normalization.
 * - `svt`: hard-thresholded SVD of the counts, floored at 0.5 and normalized.
 * - `reg`: nuclear-norm-regularized likelihood, see optimizer.hpp.
 */

namespace lrcomp {

/// Pseudo-count used by the zero-replacement and SVT estimators.
inline constexpr double pseudo_count = 0.5;

enum class EstimatorKind { mle, zero_replacement, svt, regularized };

inline std::string to_string(EstimatorKind kind) {
    switch (kind) {
    case EstimatorKind::mle:
        return "mle";
    case EstimatorKind::zero_replacement:
        return "zr";
    case EstimatorKind::svt:
        return "svt";
    default:
        return "reg";
    }
}

inline EstimatorKind parse_estimator(const std::string& name) {
    if (name == "mle") {
        return EstimatorKind::mle;
    }
    if (name == "zr") {
        return EstimatorKind::zero_replacement;
    }
    if (name == "svt") {
        return EstimatorKind::svt;
    }
    if (name == "reg") {
        return EstimatorKind::regularized;
    }
    throw ConfigError("unknown estimator '" + name + "' (expected mle, zr, svt or reg)");
}

/// Row-normalized counts. May contain exact zeros. Throws `DomainError` on a zero-total row.
inline CompositionMatrix estimate_mle(const CountMatrix& w) {
    if (w.has_zero_rows()) {
        throw DomainError("row " + std::to_string(w.zero_rows().front()) + " has no reads");
    }
    Matrix x = w.values();
    for (Index i = 0; i < x.rows(); ++i) {
        x.row(i) /= w.row_totals()[i];
    }
    return CompositionMatrix(std::move(x));
}

namespace detail {

inline Matrix floor_and_normalize(Matrix m) {
    m = m.cwiseMax(pseudo_count);
    for (Index i = 0; i < m.rows(); ++i) {
        m.row(i) /= m.row(i).sum();
    }
    return m;
}

}

/// `max(W_ij, 0.5) / sum_l max(W_il, 0.5)`.
inline CompositionMatrix estimate_zero_replacement(const CountMatrix& w) {
    return CompositionMatrix(detail::floor_and_normalize(w.values()));
}

/**
 * @brief Singular spectrum of a count matrix, reusable across several SVT thresholds.
 */
class SvtDecomposition {
public:
    explicit SvtDecomposition(const CountMatrix& w) : svd_(w.values(), Eigen::ComputeThinU | Eigen::ComputeThinV) {
        if (svd_.info() != Eigen::Success) {
            throw NumericalError("SVD of the count matrix did not converge");
        }
    }

    const Vector& singular_values() const { return svd_.singularValues(); }

    /// SVT estimate keeping every component with `sigma_k >= threshold`.
    CompositionMatrix at_threshold(double threshold) const {
        if (!(threshold >= 0)) {
            throw ConfigError("SVT threshold must be nonnegative");
        }
        const Vector& sigma = svd_.singularValues();
        Index rank = 0;
        while (rank < sigma.size() && sigma[rank] >= threshold) {
            ++rank;
        }
        return at_rank(rank);
    }

    /// SVT estimate keeping the leading `rank` components.
    CompositionMatrix at_rank(Index rank) const {
        const Index rows = svd_.matrixU().rows(), cols = svd_.matrixV().rows();
        rank = std::clamp<Index>(rank, 0, svd_.singularValues().size());
        Matrix approx = Matrix::Zero(rows, cols);
        if (rank > 0) {
            approx = svd_.matrixU().leftCols(rank) * svd_.singularValues().head(rank).asDiagonal()
                * svd_.matrixV().leftCols(rank).transpose();
        }
        return CompositionMatrix(detail::floor_and_normalize(std::move(approx)));
    }

private:
    Eigen::BDCSVD<Matrix> svd_;
};

/// Hard-thresholds the SVD of the counts at `threshold`, then floors at 0.5 and row-normalizes.
inline CompositionMatrix estimate_svt(const CountMatrix& w, double threshold) {
    return SvtDecomposition(w).at_threshold(threshold);
}

/**
 * Default SVT threshold `(sqrt(n) + sqrt(p)) * median(sigma) / sqrt(min(n, p))`.
 * A noise-scale heuristic; supply an explicit threshold or rank when better information exists.
 */
inline double svt_default_threshold(const CountMatrix& w) {
    Vector sigma = singular_values(w.values());
    std::vector<double> s(sigma.data(), sigma.data() + sigma.size());
    std::sort(s.begin(), s.end());
    const std::size_t m = s.size();
    double median = m % 2 == 1 ? s[m / 2] : 0.5 * (s[m / 2 - 1] + s[m / 2]);
    const double n = static_cast<double>(w.n()), p = static_cast<double>(w.p());
    return (std::sqrt(n) + std::sqrt(p)) * median / std::sqrt(std::min(n, p));
}

/// Regularized estimate; see `fit()`.
inline FitReport estimate_regularized(const CountMatrix& w, const SolverConfig& cfg) {
    return fit(w, cfg);
}

/**
 * Closed-form tuning level `delta * sqrt(beta_r / alpha_x^2 * p * max(n, p) * log(n + p) / (n * total))`.
 */
inline double lambda_formula(Index n, Index p, double total, double alpha_x, double beta_r, double delta) {
    if (!(delta >= 0)) {
        throw ConfigError("delta must be nonnegative");
    }
    if (!(total > 0) || !(alpha_x > 0) || !(beta_r > 0)) {
        throw ConfigError("lambda formula needs positive total count, alpha_x and beta_r");
    }
    const double nd = static_cast<double>(n), pd = static_cast<double>(p);
    return delta * std::sqrt(beta_r / (alpha_x * alpha_x) * pd * std::max(nd, pd) * std::log(nd + pd) / (nd * total));
}

/**
 * Theory-driven default lambda for the counts `w`.
 *
 * `beta_r_over_n` bounds the largest sample share of the reads; when absent, the observed
 * `max_i N_i / N` is plugged in.
 */
inline double default_lambda(const CountMatrix& w, const SimplexBounds& bounds, double delta = 7,
                             std::optional<double> beta_r_over_n = std::nullopt) {
    const double total = w.grand_total();
    if (!(total > 0)) {
        throw DomainError("count matrix has no reads");
    }
    double share = beta_r_over_n ? *beta_r_over_n : w.row_totals().maxCoeff() / total;
    return lambda_formula(w.n(), w.p(), total, bounds.alpha_x, static_cast<double>(w.n()) * share, delta);
}

/**
 * @brief Settings for `estimate()`.
 *
 * For `svt`, `svt_rank` takes precedence over `svt_threshold`; with neither the default
 * threshold is used.
 */
struct EstimatorOptions {
    SolverConfig solver;
    std::optional<double> svt_threshold;
    std::optional<Index> svt_rank;
};

/// Uniform entry point over all estimators.
inline CompositionMatrix estimate(EstimatorKind kind, const CountMatrix& w, const EstimatorOptions& options = {}) {
    switch (kind) {
    case EstimatorKind::mle:
        return estimate_mle(w);
    case EstimatorKind::zero_replacement:
        return estimate_zero_replacement(w);
    case EstimatorKind::svt: {
        SvtDecomposition svd(w);
        if (options.svt_rank) {
            return svd.at_rank(*options.svt_rank);
        }
        return svd.at_threshold(options.svt_threshold ? *options.svt_threshold : svt_default_threshold(w));
    }
    default:
        return estimate_regularized(w, options.solver).estimate;
    }
}

}

#endif
