#ifndef LRCOMP_PROJECTION_HPP
#define LRCOMP_PROJECTION_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "types.hpp"

/**
 * @file projection.hpp
 *
 * @brief Exact Euclidean projection onto the box-constrained simplex.
 *
 * The target set for a row of length `p` is
 * `{ y : sum(y) = 1, alpha_x/p <= y_i <= beta_x/p }`.
 * The minimizer is `clip(x - tau)` for a scalar shift `tau`; the clipped sum is a
 * nonincreasing piecewise-linear function of `tau` whose kinks are the `2p` values
 * `x_i - alpha_x/p` and `x_i - beta_x/p`.
 * Sorting the kinks, locating the segment where the deficit changes sign and solving the
 * linear equation on that segment gives the exact shift.
 */

namespace lrcomp {

/**
 * @brief Sorted kinks of the clipped-sum function and the deficit at each of them.
 *
 * `deficits[j] = sum_i clip(x_i - shifts[j], lo, hi) - 1`; `selected` is the zero-based index
 * of the segment start `j*` with `deficits[j*] >= 0 >= deficits[j*+1]`.
 */
struct ProjectionBreakpoints {
    std::vector<double> shifts;
    std::vector<double> deficits;
    std::size_t selected = 0;
};

namespace detail {

inline void check_projection_input(const Eigen::Ref<const Vector>& x, const SimplexBounds& bounds) {
    if (x.size() < 2) {
        throw ValidationError("projection needs at least two coordinates");
    }
    for (Index i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i])) {
            throw ValidationError("non-finite coordinate " + std::to_string(i) + " in projection input");
        }
    }
    bounds.check_feasible();
}

inline double clipped_deficit(const Eigen::Ref<const Vector>& x, double shift, double lo, double hi) {
    double sum = 0;
    for (Index i = 0; i < x.size(); ++i) {
        sum += std::clamp(x[i] - shift, lo, hi);
    }
    return sum - 1;
}

inline std::vector<double> sorted_shifts(const Eigen::Ref<const Vector>& x, double lo, double hi) {
    std::vector<double> v;
    v.reserve(2 * static_cast<std::size_t>(x.size()));
    for (Index i = 0; i < x.size(); ++i) {
        v.push_back(x[i] - lo);
        v.push_back(x[i] - hi);
    }
    std::sort(v.begin(), v.end());
    return v;
}

/*
 * Index j* of the segment containing the root: the smallest j with deficit[j] >= 0 >= deficit[j+1].
 * Deficits are nonincreasing, so j* is one before the first nonpositive deficit (or 0).
 */
inline std::size_t locate_segment(const Eigen::Ref<const Vector>& x, const std::vector<double>& v, double lo, double hi) {
    std::size_t first = 0, last = v.size();
    while (first < last) {
        std::size_t mid = first + (last - first) / 2;
        if (clipped_deficit(x, v[mid], lo, hi) > 0) {
            first = mid + 1;
        } else {
            last = mid;
        }
    }
    // `first` is the first index with a nonpositive deficit; it always exists because the
    // deficit at the largest kink is alpha_x - 1 <= 0.
    std::size_t j = first == 0 ? 0 : first - 1;
    return std::min(j, v.size() - 2);
}

inline double root_shift(const Eigen::Ref<const Vector>& x, const std::vector<double>& v, std::size_t j, double lo, double hi) {
    const double left = v[j];
    const double deficit = clipped_deficit(x, left, lo, hi);
    if (deficit <= 0) {
        return left;
    }
    const double right = v[j + 1];
    // Coordinates that stay strictly inside the box for every shift in (left, right).
    Index free = 0;
    for (Index i = 0; i < x.size(); ++i) {
        if (x[i] - hi <= left && x[i] - lo >= right) {
            ++free;
        }
    }
    if (free == 0) {
        return left;
    }
    return left + deficit / static_cast<double>(free);
}

}

/**
 * Projects `x` onto `{ y : sum(y) = 1, alpha_x/p <= y_i <= beta_x/p }` with `p = x.size()`.
 * Runs in `O(p log p)`.
 *
 * Throws `ValidationError` for non-finite input or `p < 2`, `ConfigError` for infeasible bounds.
 */
inline Vector project_row(const Eigen::Ref<const Vector>& x, const SimplexBounds& bounds) {
    detail::check_projection_input(x, bounds);
    const Index p = x.size();
    const double lo = bounds.lower(p), hi = bounds.upper(p);

    auto v = detail::sorted_shifts(x, lo, hi);
    auto j = detail::locate_segment(x, v, lo, hi);
    double shift = detail::root_shift(x, v, j, lo, hi);

    Vector out(p);
    for (Index i = 0; i < p; ++i) {
        out[i] = std::clamp(x[i] - shift, lo, hi);
    }
    return out;
}

/**
 * Diagnostic form of the projection: all kinks and their deficits.
 * This evaluates every deficit and therefore costs `O(p^2)`; `project_row()` does not use it.
 */
inline ProjectionBreakpoints projection_breakpoints(const Eigen::Ref<const Vector>& x, const SimplexBounds& bounds) {
    detail::check_projection_input(x, bounds);
    const Index p = x.size();
    const double lo = bounds.lower(p), hi = bounds.upper(p);

    ProjectionBreakpoints out;
    out.shifts = detail::sorted_shifts(x, lo, hi);
    out.deficits.reserve(out.shifts.size());
    for (double s : out.shifts) {
        out.deficits.push_back(detail::clipped_deficit(x, s, lo, hi));
    }
    out.selected = detail::locate_segment(x, out.shifts, lo, hi);
    return out;
}

/**
 * Row-wise projection of a real matrix. Rows are independent.
 */
inline Matrix project_rows(const Matrix& x, const SimplexBounds& bounds) {
    Matrix out(x.rows(), x.cols());
    for (Index i = 0; i < x.rows(); ++i) {
        out.row(i) = project_row(x.row(i).transpose(), bounds).transpose();
    }
    return out;
}

/// As `project_rows()`, wrapped as a composition matrix.
inline CompositionMatrix project_matrix(const Matrix& x, const SimplexBounds& bounds) {
    return CompositionMatrix(project_rows(x, bounds));
}

}

#endif
