#ifndef LRCOMP_OPTIMIZER_HPP
#define LRCOMP_OPTIMIZER_HPP

#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "projection.hpp"
#include "types.hpp"

/**
 * @file optimizer.hpp
 *
 * @brief Nuclear-norm-regularized maximum likelihood for composition matrices.
 *
 * Minimizes `L_N(X) + lambda * ||X||_*` over the box-constrained simplex, where
 * `L_N(X) = -N^{-1} sum_ij W_ij log X_ij` is the multinomial negative log-likelihood and
 * `N` is the total count. The solver is an accelerated proximal gradient method:
 *
 * - proximal step: project the singular-value soft-thresholded gradient step onto the constraint set;
 * - backtracking: the curvature `L_k` starts at `L_{k-1}` and is multiplied by `gamma` until
 *   the quadratic model majorizes `L_N` at the candidate;
 * - momentum: `Y_k = X_k + (k-1)/(k+rho-1) (X_k - X_{k-1})` with a high friction `rho >= 4.5`.
 */

namespace lrcomp {

namespace detail {

inline void check_same_shape(const Matrix& x, const CountMatrix& w) {
    if (x.rows() != w.n() || x.cols() != w.p()) {
        throw ValidationError("dimension mismatch: matrix is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols())
            + ", counts are " + std::to_string(w.n()) + "x" + std::to_string(w.p()));
    }
}

inline double total_count(const CountMatrix& w) {
    if (!(w.grand_total() > 0)) {
        throw DomainError("count matrix has no reads");
    }
    return w.grand_total();
}

}

/**
 * Negative log-likelihood `-N^{-1} sum_ij W_ij log X_ij`.
 * Zero counts contribute nothing whatever `X_ij` is; a nonpositive `X_ij` under a positive count
 * throws `DomainError`.
 */
inline double neg_log_likelihood(const Matrix& x, const CountMatrix& w) {
    detail::check_same_shape(x, w);
    const double total = detail::total_count(w);
    double acc = 0;
    for (Index j = 0; j < x.cols(); ++j) {
        for (Index i = 0; i < x.rows(); ++i) {
            double c = w(i, j);
            if (c == 0) {
                continue;
            }
            if (!(x(i, j) > 0)) {
                throw DomainError("log of nonpositive entry at row " + std::to_string(i) + ", column " + std::to_string(j));
            }
            acc += c * std::log(x(i, j));
        }
    }
    return -acc / total;
}

inline double neg_log_likelihood(const CompositionMatrix& x, const CountMatrix& w) {
    return neg_log_likelihood(x.values(), w);
}

/// Entrywise `-W_ij / (N X_ij)`, with entries under zero counts set to exactly zero.
inline Matrix grad_neg_log_likelihood(const Matrix& x, const CountMatrix& w) {
    detail::check_same_shape(x, w);
    const double total = detail::total_count(w);
    Matrix g(x.rows(), x.cols());
    for (Index j = 0; j < x.cols(); ++j) {
        for (Index i = 0; i < x.rows(); ++i) {
            double c = w(i, j);
            if (c == 0) {
                g(i, j) = 0;
                continue;
            }
            if (!(x(i, j) > 0)) {
                throw DomainError("gradient undefined at nonpositive entry at row " + std::to_string(i) + ", column " + std::to_string(j));
            }
            g(i, j) = -c / (total * x(i, j));
        }
    }
    return g;
}

/// Nonincreasing singular values. Throws `NumericalError` on non-finite input.
inline Vector singular_values(const Matrix& m) {
    if (!m.allFinite()) {
        throw NumericalError("SVD of a matrix with non-finite entries");
    }
    Eigen::BDCSVD<Matrix> svd(m);
    if (svd.info() != Eigen::Success) {
        throw NumericalError("SVD did not converge");
    }
    return svd.singularValues();
}

/**
 * Singular-value soft-thresholding `U diag(max(sigma - tau, 0)) V^T`, the proximal map of
 * `tau * ||.||_*`.
 */
inline Matrix soft_threshold_svd(const Matrix& m, double tau) {
    if (!(tau >= 0)) {
        throw ConfigError("soft-threshold level must be nonnegative");
    }
    if (!m.allFinite()) {
        throw NumericalError("SVD of a matrix with non-finite entries");
    }
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) {
        throw NumericalError("SVD did not converge");
    }
    const Vector& sigma = svd.singularValues();
    Index keep = 0;
    while (keep < sigma.size() && sigma[keep] > tau) {
        ++keep;
    }
    if (keep == 0) {
        return Matrix::Zero(m.rows(), m.cols());
    }
    Vector shrunk = (sigma.head(keep).array() - tau).matrix();
    return svd.matrixU().leftCols(keep) * shrunk.asDiagonal() * svd.matrixV().leftCols(keep).transpose();
}

/**
 * @brief Parameters of the regularized fit.
 */
struct SolverConfig {
    /// Weight of the nuclear norm.
    double lambda = 0;
    SimplexBounds bounds{0.01, std::numeric_limits<double>::max()};
    /// Initial curvature.
    double l0 = 1;
    /// Line-search growth factor, > 1.
    double gamma = 2;
    /// Momentum friction, >= 4.5.
    double rho = 5;
    int k_max = 2000;
    /// Tolerance on the relative change of the penalized objective.
    double eps = 1e-7;
    /// Number of consecutive iterations that must satisfy `eps`.
    int eps_window = 3;
    /// Start zero-total rows from the uniform row instead of rejecting them.
    bool uniform_zero_rows = false;
    /// Upper limit on curvature increases within one iteration.
    int max_backtracks = 200;

    void validate() const {
        if (!(lambda >= 0) || !std::isfinite(lambda)) {
            throw ConfigError("lambda must be finite and nonnegative");
        }
        bounds.check_feasible();
        if (!(bounds.alpha_x > 0)) {
            throw ConfigError("alpha_x must be positive for the regularized estimator");
        }
        if (!(l0 > 0) || !std::isfinite(l0)) {
            throw ConfigError("initial curvature L0 must be positive");
        }
        if (!(gamma > 1)) {
            throw ConfigError("line-search scale gamma must exceed 1");
        }
        if (!(rho >= 4.5)) {
            throw ConfigError("friction rho must be at least 4.5");
        }
        if (k_max < 0) {
            throw ConfigError("k_max must be nonnegative");
        }
        if (!(eps >= 0)) {
            throw ConfigError("eps must be nonnegative");
        }
        if (eps_window < 1) {
            throw ConfigError("eps window must be at least 1");
        }
    }

    /// The configured bounds with `beta_x` capped at `p`, which leaves the set unchanged.
    SimplexBounds bounds_for(Index p) const {
        SimplexBounds b = bounds;
        b.beta_x = std::min(b.beta_x, static_cast<double>(p));
        return b;
    }
};

/**
 * Proximal gradient step from `y` with curvature `l`: the rows of
 * `D_{lambda/l}(y - grad(y)/l)` projected onto the constraint set.
 */
inline Matrix prox_step(const Matrix& y, const CountMatrix& w, double l, const SolverConfig& cfg) {
    if (!(l > 0)) {
        throw ConfigError("curvature must be positive");
    }
    Matrix shifted = y - grad_neg_log_likelihood(y, w) / l;
    return project_rows(soft_threshold_svd(shifted, cfg.lambda / l), cfg.bounds_for(w.p()));
}

/**
 * Error of the quadratic model at `x_new` around `y_old`:
 * `L_N(x_new) - L_N(y_old) - <x_new - y_old, grad L_N(y_old)> - (l/2) ||x_new - y_old||_F^2`.
 * A nonpositive value means the model with curvature `l` majorizes `L_N` at `x_new`.
 */
inline double line_search_gap(const Matrix& x_new, const Matrix& y_old, const CountMatrix& w, double l) {
    detail::check_same_shape(x_new, w);
    detail::check_same_shape(y_old, w);
    Matrix diff = x_new - y_old;
    return neg_log_likelihood(x_new, w) - neg_log_likelihood(y_old, w)
        - diff.cwiseProduct(grad_neg_log_likelihood(y_old, w)).sum()
        - 0.5 * l * diff.squaredNorm();
}

/**
 * @brief Outcome of `fit()`.
 *
 * Traces are indexed by iteration with entry 0 describing the (projected) initializer.
 */
struct FitReport {
    CompositionMatrix estimate;
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace;
    std::vector<double> curvature_trace;
    std::vector<double> gap_trace;
    /// Total number of rejected curvature candidates.
    long long backtracks = 0;
    /// Entries of the momentum point that were raised to `momentum_floor` before evaluating the gradient.
    long long clamp_events = 0;
    Vector final_singular_values;
    double lambda = 0;
    SimplexBounds bounds;
};

/// Positive floor applied to momentum points under positive counts.
inline constexpr double momentum_floor = 1e-12;

namespace detail {

inline Matrix row_normalized_start(const CountMatrix& w, bool uniform_zero_rows) {
    if (w.has_zero_rows() && !uniform_zero_rows) {
        throw DomainError("row " + std::to_string(w.zero_rows().front()) + " has no reads");
    }
    Matrix x0(w.n(), w.p());
    for (Index i = 0; i < w.n(); ++i) {
        double total = w.row_totals()[i];
        if (total > 0) {
            x0.row(i) = w.values().row(i) / total;
        } else {
            x0.row(i).setConstant(1.0 / static_cast<double>(w.p()));
        }
    }
    return x0;
}

inline double penalized_objective(const Matrix& x, const CountMatrix& w, double lambda) {
    double value = neg_log_likelihood(x, w);
    if (lambda > 0) {
        value += lambda * singular_values(x).sum();
    }
    return value;
}

}

/**
 * Writes the per-iteration trace as CSV with columns `iteration,objective,curvature,gap`.
 */
inline void write_trace_csv(std::ostream& out, const FitReport& report) {
    auto old = out.precision(17);
    out << "iteration,objective,curvature,gap\n";
    for (std::size_t k = 0; k < report.objective_trace.size(); ++k) {
        out << k << ',' << report.objective_trace[k] << ',' << report.curvature_trace[k] << ',' << report.gap_trace[k] << '\n';
    }
    out.precision(old);
}

/**
 * Runs the accelerated proximal gradient method from the row-normalized counts.
 *
 * Stops once the relative change of the penalized objective stays below `cfg.eps` for
 * `cfg.eps_window` consecutive iterations, or after `cfg.k_max` iterations.
 *
 * Throws `DomainError` for zero-total rows (unless `cfg.uniform_zero_rows`), `ConfigError` for
 * bad parameters and `NumericalError` if the objective stops being finite or the line search runs away.
 */
inline FitReport fit(const CountMatrix& w, const SolverConfig& cfg) {
    cfg.validate();
    detail::total_count(w);
    const SimplexBounds bounds = cfg.bounds_for(w.p());

    FitReport report;
    report.lambda = cfg.lambda;
    report.bounds = bounds;

    Matrix x = project_rows(detail::row_normalized_start(w, cfg.uniform_zero_rows), bounds);
    Matrix x_prev = x;
    Matrix y = x;
    double curvature = cfg.l0;

    double objective = detail::penalized_objective(x, w, cfg.lambda);
    report.objective_trace.push_back(objective);
    report.curvature_trace.push_back(curvature);
    report.gap_trace.push_back(0);

    auto fail = [&](const std::string& what) {
        std::string msg = what + " at iteration " + std::to_string(report.iterations) + "; objective trace:";
        for (double v : report.objective_trace) {
            msg += ' ' + std::to_string(v);
        }
        throw NumericalError(msg);
    };
    if (!std::isfinite(objective)) {
        fail("non-finite objective");
    }

    const double floor = std::max(momentum_floor, bounds.lower(w.p()));
    int calm = 0;
    for (int k = 1; k <= cfg.k_max; ++k) {
        for (Index j = 0; j < y.cols(); ++j) {
            for (Index i = 0; i < y.rows(); ++i) {
                if (w(i, j) > 0 && y(i, j) < floor) {
                    y(i, j) = floor;
                    ++report.clamp_events;
                }
            }
        }

        const Matrix grad = grad_neg_log_likelihood(y, w);
        const double loss_at_y = neg_log_likelihood(y, w);
        const SimplexBounds& b = bounds;

        Matrix candidate;
        double gap = 0;
        int tries = 0;
        while (true) {
            Matrix shifted = y - grad / curvature;
            candidate = project_rows(soft_threshold_svd(shifted, cfg.lambda / curvature), b);
            Matrix diff = candidate - y;
            gap = neg_log_likelihood(candidate, w) - loss_at_y - diff.cwiseProduct(grad).sum() - 0.5 * curvature * diff.squaredNorm();
            if (gap <= 0) {
                break;
            }
            if (!std::isfinite(gap) || ++tries > cfg.max_backtracks) {
                report.iterations = k;
                fail("line search failed");
            }
            curvature *= cfg.gamma;
            ++report.backtracks;
        }

        x_prev = std::move(x);
        x = std::move(candidate);
        const double momentum = static_cast<double>(k - 1) / (static_cast<double>(k) + cfg.rho - 1);
        y = x + momentum * (x - x_prev);

        const double next = detail::penalized_objective(x, w, cfg.lambda);
        report.iterations = k;
        report.objective_trace.push_back(next);
        report.curvature_trace.push_back(curvature);
        report.gap_trace.push_back(gap);
        if (!std::isfinite(next)) {
            fail("non-finite objective");
        }

        const double change = std::abs(next - objective) / std::max(std::abs(objective), std::numeric_limits<double>::min());
        objective = next;
        calm = change < cfg.eps ? calm + 1 : 0;
        if (calm >= cfg.eps_window) {
            report.converged = true;
            break;
        }
    }

    report.final_singular_values = singular_values(x);
    report.estimate = CompositionMatrix(std::move(x));
    return report;
}

}

#endif
