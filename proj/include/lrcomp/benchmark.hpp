#ifndef LRCOMP_BENCHMARK_HPP
#define LRCOMP_BENCHMARK_HPP

#include <algorithm>
#include <limits>
#include <map>
#include <stdexcept>
#include <ostream>
#include <string>
#include <vector>

#include "estimators.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "simulation.hpp"
#include "tuning.hpp"

/**
 * @file benchmark.hpp
 *
 * @brief Monte Carlo comparison of estimators on simulated data.
 *
 * Replicate `k` draws its truth from stream `(seed, k, 0)`, its counts from `(seed, k, 1)` and
 * its CV splits from `(seed, k, 2)`, so scenarios that differ only in `gamma` share the same
 * truths. Replicates are independent and may run concurrently; results are stored by replicate
 * index, which keeps reports identical for any number of jobs.
 */

namespace lrcomp {

/// How the SVT threshold is chosen in benchmarks.
enum class SvtSelection {
    /// Sweep every rank and keep the one closest to the truth in Frobenius norm (a best case for SVT).
    oracle,
    /// Use `svt_default_threshold()`.
    heuristic,
};

struct BenchmarkOptions {
    std::vector<EstimatorKind> estimators{EstimatorKind::regularized, EstimatorKind::zero_replacement, EstimatorKind::svt};
    int lambda_grid_size = 8;
    std::vector<double> alphas = default_alpha_grid();
    int k_folds = 5;
    int n_splits = 5;
    CvScore cv_score = CvScore::held_out;
    SolverConfig solver;
    SvtSelection svt = SvtSelection::oracle;
    int jobs = 1;
};

/// Metric names in report order, with the scale used by the summary table.
struct MetricInfo {
    const char* name;
    double scale;
    const char* units;
};

inline const std::vector<MetricInfo>& benchmark_metrics() {
    static const std::vector<MetricInfo> metrics{
        {"frobenius_sq", 1e-2, "x1e-2"},
        {"avg_kl", 1e-2, "x1e-2"},
        {"shannon_mse", 1e-3, "x1e-3"},
        {"simpson_mse", 1e-6, "x1e-6"},
    };
    return metrics;
}

struct MetricRecord {
    int replicate = 0;
    std::string estimator;
    std::string metric;
    double value = 0;
};

struct FailureRecord {
    int replicate = 0;
    std::string estimator;
    std::string message;
};

/// Tuning outcome of the regularized estimator (or the SVT rank) in one replicate.
struct TuningRecord {
    int replicate = 0;
    double lambda = 0;
    double alpha_x = 0;
    Index svt_rank = 0;
    int iterations = 0;
    bool converged = false;
};

struct SummaryRecord {
    std::string estimator;
    std::string metric;
    double mean = 0;
    int count = 0;
    double scale = 1;
    std::string units;
};

struct BenchmarkReport {
    SimScenario scenario;
    std::vector<MetricRecord> records;
    std::vector<FailureRecord> failures;
    std::vector<TuningRecord> tuning;

    /// Mean of each (estimator, metric) over the replicates where it was computed.
    std::vector<SummaryRecord> summary() const {
        std::vector<SummaryRecord> out;
        std::vector<std::string> order;
        for (const auto& r : records) {
            if (std::find(order.begin(), order.end(), r.estimator) == order.end()) {
                order.push_back(r.estimator);
            }
        }
        for (const auto& est : order) {
            for (const auto& m : benchmark_metrics()) {
                double sum = 0;
                int count = 0;
                for (const auto& r : records) {
                    if (r.estimator == est && r.metric == m.name) {
                        sum += r.value;
                        ++count;
                    }
                }
                if (count > 0) {
                    out.push_back(SummaryRecord{est, m.name, sum / count, count, m.scale, m.units});
                }
            }
        }
        return out;
    }

    /// Summary mean for one cell; throws `std::out_of_range` if absent.
    double mean(const std::string& estimator, const std::string& metric) const {
        for (const auto& s : summary()) {
            if (s.estimator == estimator && s.metric == metric) {
                return s.mean;
            }
        }
        throw std::out_of_range("no summary for " + estimator + "/" + metric);
    }
};

/**
 * @brief Everything computed for one replicate, also used for scatter output.
 */
struct ReplicateResult {
    CompositionMatrix truth;
    CountMatrix counts;
    std::map<std::string, CompositionMatrix> estimates;
    std::vector<MetricRecord> records;
    std::vector<FailureRecord> failures;
    TuningRecord tuning;
};

namespace detail {

inline void score_estimate(const CompositionMatrix& truth, const CompositionMatrix& estimate, const std::string& name,
                           int replicate, ReplicateResult& out) {
    const double n = static_cast<double>(truth.n());
    auto record = [&](const char* metric, auto compute) {
        try {
            out.records.push_back(MetricRecord{replicate, name, metric, compute()});
        } catch (const Error& e) {
            out.failures.push_back(FailureRecord{replicate, name, std::string(metric) + ": " + e.what()});
        }
    };
    record("frobenius_sq", [&] { return frobenius_sq(truth, estimate); });
    record("avg_kl", [&] { return kl_matrix(truth, estimate) / n; });
    record("shannon_mse", [&] { return index_mse(shannon_index(truth), shannon_index(estimate)); });
    record("simpson_mse", [&] { return index_mse(simpson_index(truth), simpson_index(estimate)); });
}

}

/// Runs all estimators on replicate `replicate` of `scenario`.
inline ReplicateResult run_replicate(const SimScenario& scenario, const BenchmarkOptions& options, int replicate) {
    const auto rep = static_cast<std::uint64_t>(replicate);
    ReplicateResult out;
    out.tuning.replicate = replicate;
    out.truth = generate_composition(scenario, derive_seed(scenario.seed, {rep, 0}));
    out.counts = generate_counts(out.truth, scenario.gamma, derive_seed(scenario.seed, {rep, 1}));

    for (EstimatorKind kind : options.estimators) {
        const std::string name = to_string(kind);
        try {
            CompositionMatrix estimate;
            switch (kind) {
            case EstimatorKind::regularized: {
                TuningGrid grid = default_tuning_grid(out.counts, options.lambda_grid_size, options.alphas);
                CvPlan plan = make_cv_plan(out.counts, options.k_folds, options.n_splits, grid,
                                           derive_seed(scenario.seed, {rep, 2}), options.cv_score);
                auto [tuning, report] = tune_and_fit(out.counts, plan, options.solver);
                out.tuning.lambda = tuning.lambda;
                out.tuning.alpha_x = tuning.alpha_x;
                out.tuning.iterations = report.iterations;
                out.tuning.converged = report.converged;
                estimate = std::move(report.estimate);
                break;
            }
            case EstimatorKind::svt: {
                SvtDecomposition svd(out.counts);
                if (options.svt == SvtSelection::oracle) {
                    const Index max_rank = svd.singular_values().size();
                    Index best_rank = 0;
                    double best = std::numeric_limits<double>::infinity();
                    for (Index k = 0; k <= max_rank; ++k) {
                        double loss = frobenius_sq(out.truth, svd.at_rank(k));
                        if (loss < best) {
                            best = loss;
                            best_rank = k;
                        }
                    }
                    out.tuning.svt_rank = best_rank;
                    estimate = svd.at_rank(best_rank);
                } else {
                    estimate = svd.at_threshold(svt_default_threshold(out.counts));
                }
                break;
            }
            default:
                estimate = lrcomp::estimate(kind, out.counts);
                break;
            }
            detail::score_estimate(out.truth, estimate, name, replicate, out);
            out.estimates.emplace(name, std::move(estimate));
        } catch (const Error& e) {
            out.failures.push_back(FailureRecord{replicate, name, e.what()});
        }
    }
    return out;
}

/**
 * Simulates `scenario.replicates` data sets and scores every estimator in `options` on each.
 * Failures of single replicates or estimators are recorded in the report instead of thrown.
 */
inline BenchmarkReport run_benchmark(const SimScenario& scenario, const BenchmarkOptions& options) {
    scenario.validate();
    BenchmarkReport report;
    report.scenario = scenario;
    const auto count = static_cast<std::size_t>(scenario.replicates);
    std::vector<ReplicateResult> results(count);
    std::vector<std::string> fatal(count);
    parallel_for(count, options.jobs, [&](std::size_t k) {
        try {
            results[k] = run_replicate(scenario, options, static_cast<int>(k));
        } catch (const Error& e) {
            fatal[k] = e.what();
        }
    });
    for (std::size_t k = 0; k < count; ++k) {
        if (!fatal[k].empty()) {
            report.failures.push_back(FailureRecord{static_cast<int>(k), "*", fatal[k]});
            continue;
        }
        auto& r = results[k];
        report.records.insert(report.records.end(), r.records.begin(), r.records.end());
        report.failures.insert(report.failures.end(), r.failures.begin(), r.failures.end());
        report.tuning.push_back(r.tuning);
    }
    return report;
}

inline void write_scenario_header(std::ostream& out) {
    out << "n,p,r,gamma,seed";
}

inline void write_scenario_fields(std::ostream& out, const SimScenario& s) {
    out << s.n << ',' << s.p << ',' << s.r << ',' << format_number(s.gamma) << ',' << s.seed;
}

/// Long-format report: one line per (scenario, replicate, estimator, metric).
inline void write_report_csv(std::ostream& out, const std::vector<BenchmarkReport>& reports) {
    write_scenario_header(out);
    out << ",replicate,estimator,metric,value\n";
    for (const auto& rep : reports) {
        for (const auto& r : rep.records) {
            write_scenario_fields(out, rep.scenario);
            out << ',' << r.replicate << ',' << r.estimator << ',' << r.metric << ',' << format_number(r.value) << '\n';
        }
    }
}

/// Table-style summary: mean per (scenario, estimator, metric), with the mean also in table units.
inline void write_summary_csv(std::ostream& out, const std::vector<BenchmarkReport>& reports) {
    write_scenario_header(out);
    out << ",estimator,metric,replicates,mean,scaled_mean,units\n";
    for (const auto& rep : reports) {
        for (const auto& s : rep.summary()) {
            write_scenario_fields(out, rep.scenario);
            out << ',' << s.estimator << ',' << s.metric << ',' << s.count << ',' << format_number(s.mean) << ','
                << format_number(s.mean / s.scale) << ',' << s.units << '\n';
        }
    }
}

/// Per-replicate tuning choices and any recorded failures.
inline void write_tuning_csv(std::ostream& out, const std::vector<BenchmarkReport>& reports) {
    write_scenario_header(out);
    out << ",replicate,lambda,alpha_x,iterations,converged,svt_rank\n";
    for (const auto& rep : reports) {
        for (const auto& t : rep.tuning) {
            write_scenario_fields(out, rep.scenario);
            out << ',' << t.replicate << ',' << format_number(t.lambda) << ',' << format_number(t.alpha_x) << ','
                << t.iterations << ',' << (t.converged ? 1 : 0) << ',' << t.svt_rank << '\n';
        }
    }
}

inline void write_failures_csv(std::ostream& out, const std::vector<BenchmarkReport>& reports) {
    write_scenario_header(out);
    out << ",replicate,estimator,message\n";
    for (const auto& rep : reports) {
        for (const auto& f : rep.failures) {
            std::string msg = f.message;
            std::replace(msg.begin(), msg.end(), ',', ';');
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            write_scenario_fields(out, rep.scenario);
            out << ',' << f.replicate << ',' << f.estimator << ',' << msg << '\n';
        }
    }
}

/// Truth-versus-estimate pairs of one replicate, for scatter plots.
inline void write_scatter_csv(std::ostream& out, const ReplicateResult& result) {
    out << "estimator,row,column,truth,estimate\n";
    for (const auto& [name, est] : result.estimates) {
        for (Index i = 0; i < est.n(); ++i) {
            for (Index j = 0; j < est.p(); ++j) {
                out << name << ',' << i << ',' << j << ',' << format_number(result.truth(i, j)) << ','
                    << format_number(est(i, j)) << '\n';
            }
        }
    }
}

}

#endif
