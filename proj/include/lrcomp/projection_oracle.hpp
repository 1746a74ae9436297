#ifndef LRCOMP_PROJECTION_ORACLE_HPP
#define LRCOMP_PROJECTION_ORACLE_HPP

#include <cmath>
#include <limits>
#include <vector>

#include "types.hpp"

/**
 * @file projection_oracle.hpp
 *
 * @brief Reference solver for the box-constrained simplex projection, by active-set enumeration.
 *
 * Every coordinate is assigned one of three states (free, at the lower bound, at the upper bound).
 * For each of the `3^p` patterns the equality-constrained least-squares problem has a closed form
 * (free coordinates are `x_i - mu` with a common multiplier `mu`) and the pattern is accepted when
 * the KKT sign conditions hold. This shares no code with `project_row()` and is only meant for
 * small `p` (at most 12 or so).
 */

namespace lrcomp {

namespace detail {

class ActiveSetSearch {
public:
    ActiveSetSearch(const Vector& x, double lo, double hi, double tol) :
        x_(x), lo_(lo), hi_(hi), tol_(tol), state_(static_cast<std::size_t>(x.size()), 0) {}

    bool run() { return descend(0, 0.0, 0, 0, 0); }

    Vector solution() const { return solution_; }

private:
    enum : unsigned char { FREE = 0, LOWER = 1, UPPER = 2 };

    bool descend(Index i, double free_sum, Index free_count, Index lower_count, Index upper_count) {
        const Index p = x_.size();
        if (i == p) {
            return check_leaf(free_sum, free_count, lower_count, upper_count);
        }
        auto s = static_cast<std::size_t>(i);
        state_[s] = FREE;
        if (descend(i + 1, free_sum + x_[i], free_count + 1, lower_count, upper_count)) {
            return true;
        }
        state_[s] = LOWER;
        if (descend(i + 1, free_sum, free_count, lower_count + 1, upper_count)) {
            return true;
        }
        state_[s] = UPPER;
        return descend(i + 1, free_sum, free_count, lower_count, upper_count + 1);
    }

    bool check_leaf(double free_sum, Index free_count, Index lower_count, Index upper_count) {
        const Index p = x_.size();
        const double fixed = static_cast<double>(lower_count) * lo_ + static_cast<double>(upper_count) * hi_;

        double mu_lo = -std::numeric_limits<double>::infinity();
        double mu_hi = std::numeric_limits<double>::infinity();
        double mu;
        if (free_count > 0) {
            mu = (free_sum + fixed - 1) / static_cast<double>(free_count);
        } else {
            // No free coordinate: the bounds alone must sum to one, and any multiplier
            // compatible with the sign conditions certifies optimality.
            if (std::abs(fixed - 1) > tol_) {
                return false;
            }
            mu = std::numeric_limits<double>::quiet_NaN();
        }

        for (Index i = 0; i < p; ++i) {
            switch (state_[static_cast<std::size_t>(i)]) {
            case FREE: {
                double y = x_[i] - mu;
                if (y < lo_ - tol_ || y > hi_ + tol_) {
                    return false;
                }
                break;
            }
            case LOWER:
                // Multiplier of the lower bound is nonnegative: x_i - mu <= lo.
                mu_lo = std::max(mu_lo, x_[i] - lo_);
                break;
            default:
                mu_hi = std::min(mu_hi, x_[i] - hi_);
                break;
            }
        }

        if (free_count > 0) {
            if (mu_lo > mu + tol_ || mu_hi < mu - tol_) {
                return false;
            }
        } else if (mu_lo > mu_hi + tol_) {
            return false;
        }

        solution_.resize(p);
        for (Index i = 0; i < p; ++i) {
            switch (state_[static_cast<std::size_t>(i)]) {
            case FREE:
                solution_[i] = x_[i] - mu;
                break;
            case LOWER:
                solution_[i] = lo_;
                break;
            default:
                solution_[i] = hi_;
                break;
            }
        }
        return true;
    }

    const Vector& x_;
    double lo_, hi_, tol_;
    std::vector<unsigned char> state_;
    Vector solution_;
};

}

/**
 * Solves the projection QP by enumerating all active sets and returns the first KKT point.
 * The problem is strictly convex, so the KKT point is the unique minimizer.
 *
 * Throws `ConfigError` for infeasible bounds and `NumericalError` if no pattern passes the
 * KKT checks (which would indicate a tolerance problem).
 */
inline Vector qp_projection_oracle(const Vector& x, const SimplexBounds& bounds) {
    bounds.check_feasible();
    const Index p = x.size();
    if (p < 1) {
        throw ValidationError("empty projection input");
    }
    const double lo = bounds.lower(p), hi = bounds.upper(p);
    const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
    detail::ActiveSetSearch search(x, lo, hi, 1e-12 * scale);
    if (!search.run()) {
        throw NumericalError("active-set enumeration found no KKT point");
    }
    return search.solution();
}

}

#endif
