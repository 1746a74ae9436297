#ifndef LRCOMP_METRICS_HPP
#define LRCOMP_METRICS_HPP

#include <cmath>
#include <string>

#include "optimizer.hpp"
#include "types.hpp"

/**
 * @file metrics.hpp
 *
 * @brief Loss functions between composition matrices and per-sample diversity indices.
 *
 * Natural logarithms throughout. In divergences `0 log 0 = 0` applies to the first argument only;
 * a zero in the second argument under a positive first argument is reported as `DomainError`
 * rather than returned as infinity.
 */

namespace lrcomp {

namespace detail {

inline void check_pair(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ValidationError("dimension mismatch between compared matrices");
    }
}

}

/// KL divergence between two probability rows.
template <typename RowA, typename RowB>
double kl_row(const RowA& truth, const RowB& estimate) {
    double acc = 0;
    for (Index j = 0; j < truth.size(); ++j) {
        double t = truth[j];
        if (t == 0) {
            continue;
        }
        double e = estimate[j];
        if (!(e > 0)) {
            throw DomainError("divergence is infinite: zero estimate at column " + std::to_string(j) + " under positive reference");
        }
        acc += t * std::log(t / e);
    }
    return acc;
}

/// Sum over rows of `sum_j truth_ij log(truth_ij / estimate_ij)`.
inline double kl_matrix(const Matrix& truth, const Matrix& estimate) {
    detail::check_pair(truth, estimate);
    double acc = 0;
    for (Index i = 0; i < truth.rows(); ++i) {
        try {
            acc += kl_row(truth.row(i), estimate.row(i));
        } catch (const DomainError& e) {
            throw DomainError(std::string(e.what()) + ", row " + std::to_string(i));
        }
    }
    return acc;
}

inline double kl_matrix(const CompositionMatrix& truth, const CompositionMatrix& estimate) {
    return kl_matrix(truth.values(), estimate.values());
}

/// Squared Frobenius distance.
inline double frobenius_sq(const Matrix& truth, const Matrix& estimate) {
    detail::check_pair(truth, estimate);
    return (estimate - truth).squaredNorm();
}

inline double frobenius_sq(const CompositionMatrix& truth, const CompositionMatrix& estimate) {
    return frobenius_sq(truth.values(), estimate.values());
}

/// `p/n` times the squared Frobenius distance.
inline double frobenius_sq_scaled(const Matrix& truth, const Matrix& estimate) {
    return frobenius_sq(truth, estimate) * static_cast<double>(truth.cols()) / static_cast<double>(truth.rows());
}

/// Per-row Shannon entropy in nats. Requires strictly positive entries.
inline Vector shannon_index(const Matrix& x) {
    Vector out(x.rows());
    for (Index i = 0; i < x.rows(); ++i) {
        double h = 0;
        for (Index j = 0; j < x.cols(); ++j) {
            double v = x(i, j);
            if (!(v > 0)) {
                throw DomainError("Shannon index needs positive entries: zero at row " + std::to_string(i) + ", column " + std::to_string(j));
            }
            h -= v * std::log(v);
        }
        out[i] = h;
    }
    return out;
}

inline Vector shannon_index(const CompositionMatrix& x) {
    return shannon_index(x.values());
}

/// Per-row sum of squares.
inline Vector simpson_index(const Matrix& x) {
    return x.rowwise().squaredNorm();
}

inline Vector simpson_index(const CompositionMatrix& x) {
    return simpson_index(x.values());
}

/// Mean squared difference between two index vectors.
inline double index_mse(const Vector& truth, const Vector& estimate) {
    if (truth.size() != estimate.size()) {
        throw ValidationError("index vectors differ in length");
    }
    if (truth.size() == 0) {
        return 0;
    }
    return (estimate - truth).squaredNorm() / static_cast<double>(truth.size());
}

/// Singular values in nonincreasing order, for inspecting spectral decay.
inline Vector singular_value_profile(const Matrix& x) {
    return singular_values(x);
}

}

#endif
