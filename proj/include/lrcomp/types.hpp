#ifndef LRCOMP_TYPES_HPP
#define LRCOMP_TYPES_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "errors.hpp"

/**
 * @file types.hpp
 *
 * @brief Domain types for count matrices, composition matrices and the box-constrained simplex.
 *
 * All matrices are dense with samples in rows and taxa in columns.
 * Objects are immutable after construction and can be shared freely across threads.
 */

namespace lrcomp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Tolerance on row sums of a composition matrix.
inline constexpr double row_sum_tolerance = 1e-9;

/// Slack allowed on the entrywise bounds of a composition matrix.
inline constexpr double bound_slack = 1e-12;

/**
 * @brief Entrywise bounds of the constraint set.
 *
 * A row of length `p` is feasible when it sums to one and every entry lies in
 * `[alpha_x / p, beta_x / p]`.
 * The set is nonempty iff `alpha_x <= 1 <= beta_x`.
 */
struct SimplexBounds {
    double alpha_x = 0.01;
    double beta_x = 1;

    double lower(Index p) const { return alpha_x / static_cast<double>(p); }
    double upper(Index p) const { return beta_x / static_cast<double>(p); }

    /**
     * Throws `ConfigError` unless the bounds describe a nonempty set.
     * A zero lower scale is accepted here; the regularized estimator additionally requires `alpha_x > 0`.
     */
    void check_feasible() const {
        if (!std::isfinite(alpha_x) || !std::isfinite(beta_x)) {
            throw ConfigError("simplex bounds must be finite");
        }
        if (alpha_x < 0 || alpha_x > 1 || beta_x < 1) {
            throw ConfigError("infeasible simplex bounds: need 0 <= alpha_x <= 1 <= beta_x (got alpha_x="
                + std::to_string(alpha_x) + ", beta_x=" + std::to_string(beta_x) + ")");
        }
    }

    /// Bounds with the upper constraint switched off, i.e. `beta_x = p`.
    static SimplexBounds lower_only(double alpha_x, Index p) {
        return SimplexBounds{alpha_x, static_cast<double>(p)};
    }
};

/**
 * @brief Nonnegative integer read counts, samples by taxa.
 *
 * Counts are stored as doubles (exact for integers below 2^53) since every consumer
 * works in floating point. Rows with a zero total are allowed here and reported by `zero_rows()`.
 */
class CountMatrix {
public:
    CountMatrix() = default;

    /// Validates `values` and precomputes the totals. Throws `ValidationError` on any violation.
    explicit CountMatrix(Matrix values) : values_(std::move(values)) {
        if (values_.rows() < 1) {
            throw ValidationError("count matrix needs at least one row");
        }
        if (values_.cols() < 2) {
            throw ValidationError("count matrix needs at least two columns");
        }
        for (Index i = 0; i < values_.rows(); ++i) {
            for (Index j = 0; j < values_.cols(); ++j) {
                double v = values_(i, j);
                if (!std::isfinite(v) || v < 0) {
                    throw ValidationError("negative or non-finite count at row " + std::to_string(i)
                        + ", column " + std::to_string(j));
                }
                if (v != std::floor(v)) {
                    throw ValidationError("non-integral count at row " + std::to_string(i)
                        + ", column " + std::to_string(j));
                }
            }
        }
        row_totals_ = values_.rowwise().sum();
        grand_total_ = row_totals_.sum();
        for (Index i = 0; i < values_.rows(); ++i) {
            if (row_totals_[i] == 0) {
                zero_rows_.push_back(i);
            }
        }
    }

    Index n() const { return values_.rows(); }
    Index p() const { return values_.cols(); }
    double operator()(Index i, Index j) const { return values_(i, j); }
    const Matrix& values() const { return values_; }
    const Vector& row_totals() const { return row_totals_; }
    double grand_total() const { return grand_total_; }

    /// Indices of rows whose total is zero, in increasing order.
    const std::vector<Index>& zero_rows() const { return zero_rows_; }
    bool has_zero_rows() const { return !zero_rows_.empty(); }

private:
    Matrix values_;
    Vector row_totals_;
    double grand_total_ = 0;
    std::vector<Index> zero_rows_;
};

/**
 * @brief Real matrix whose rows lie on the probability simplex.
 *
 * Rows are nonnegative and sum to one within `row_sum_tolerance`.
 * Baseline estimators may produce exact zeros, which are flagged by `has_zeros()`.
 */
class CompositionMatrix {
public:
    CompositionMatrix() = default;

    explicit CompositionMatrix(Matrix values) : values_(std::move(values)) {
        if (values_.rows() < 1 || values_.cols() < 1) {
            throw ValidationError("composition matrix must be nonempty");
        }
        for (Index i = 0; i < values_.rows(); ++i) {
            double sum = 0;
            for (Index j = 0; j < values_.cols(); ++j) {
                double v = values_(i, j);
                if (!std::isfinite(v) || v < 0) {
                    throw ValidationError("negative or non-finite composition entry at row " + std::to_string(i)
                        + ", column " + std::to_string(j));
                }
                if (v == 0) {
                    has_zeros_ = true;
                }
                sum += v;
            }
            if (std::abs(sum - 1) > row_sum_tolerance) {
                throw ValidationError("row " + std::to_string(i) + " sums to " + std::to_string(sum) + ", not 1");
            }
        }
    }

    Index n() const { return values_.rows(); }
    Index p() const { return values_.cols(); }
    double operator()(Index i, Index j) const { return values_(i, j); }
    const Matrix& values() const { return values_; }
    bool has_zeros() const { return has_zeros_; }

private:
    Matrix values_;
    bool has_zeros_ = false;
};

/**
 * @brief Relative sequencing depths, one positive weight per sample, summing to one.
 */
class RowWeights {
public:
    explicit RowWeights(Vector r) : r_(std::move(r)) {
        if (r_.size() < 1) {
            throw ValidationError("row weights must be nonempty");
        }
        for (Index i = 0; i < r_.size(); ++i) {
            if (!(r_[i] > 0) || !std::isfinite(r_[i])) {
                throw ValidationError("row weight " + std::to_string(i) + " is not positive");
            }
        }
        if (std::abs(r_.sum() - 1) > 1e-12) {
            throw ValidationError("row weights do not sum to 1");
        }
    }

    /// Normalizes positive values (e.g. row totals) into weights.
    static RowWeights from_unnormalized(const Vector& v) {
        double total = v.sum();
        if (!(total > 0)) {
            throw ValidationError("cannot normalize row weights with nonpositive total");
        }
        Vector r = v / total;
        // Absorb rounding so the sum is 1 to within a few ulps.
        r /= r.sum();
        return RowWeights(std::move(r));
    }

    const Vector& values() const { return r_; }
    Index size() const { return r_.size(); }
    double operator[](Index i) const { return r_[i]; }

private:
    Vector r_;
};

namespace detail {

template <typename T>
Matrix table_to_matrix(const std::vector<std::vector<T>>& raw) {
    if (raw.empty()) {
        throw ValidationError("table has no rows");
    }
    const std::size_t width = raw.front().size();
    Matrix out(static_cast<Index>(raw.size()), static_cast<Index>(width));
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i].size() != width) {
            throw ValidationError("table is not rectangular: row " + std::to_string(i) + " has "
                + std::to_string(raw[i].size()) + " fields, expected " + std::to_string(width));
        }
        for (std::size_t j = 0; j < width; ++j) {
            out(static_cast<Index>(i), static_cast<Index>(j)) = static_cast<double>(raw[i][j]);
        }
    }
    return out;
}

}

/**
 * Builds a `CountMatrix` from a row-major table.
 * Throws `ValidationError` for ragged tables, negative, non-integral or non-finite entries.
 */
template <typename T>
CountMatrix validate_counts(const std::vector<std::vector<T>>& raw) {
    return CountMatrix(detail::table_to_matrix(raw));
}

inline CountMatrix validate_counts(const Matrix& raw) {
    return CountMatrix(raw);
}

/**
 * Accepts `raw` iff every row sums to one within `row_sum_tolerance` and every entry lies in
 * `[alpha_x/p - bound_slack, beta_x/p + bound_slack]`.
 * Errors name the offending row.
 */
inline CompositionMatrix validate_composition(const Matrix& raw, const SimplexBounds& bounds) {
    bounds.check_feasible();
    const Index p = raw.cols();
    const double lo = bounds.lower(p) - bound_slack;
    const double hi = bounds.upper(p) + bound_slack;
    for (Index i = 0; i < raw.rows(); ++i) {
        double sum = 0;
        for (Index j = 0; j < p; ++j) {
            double v = raw(i, j);
            if (!std::isfinite(v)) {
                throw ValidationError("non-finite entry at row " + std::to_string(i));
            }
            sum += v;
        }
        if (std::abs(sum - 1) > row_sum_tolerance) {
            throw ValidationError("row " + std::to_string(i) + " sums to " + std::to_string(sum) + ", not 1");
        }
        for (Index j = 0; j < p; ++j) {
            if (raw(i, j) < lo || raw(i, j) > hi) {
                throw ValidationError("entry at row " + std::to_string(i) + ", column " + std::to_string(j)
                    + " is outside [" + std::to_string(bounds.lower(p)) + ", " + std::to_string(bounds.upper(p)) + "]");
            }
        }
    }
    return CompositionMatrix(raw);
}

template <typename T>
CompositionMatrix validate_composition(const std::vector<std::vector<T>>& raw, const SimplexBounds& bounds) {
    return validate_composition(detail::table_to_matrix(raw), bounds);
}

}

#endif
