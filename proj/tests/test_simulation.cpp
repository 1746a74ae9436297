#include <gtest/gtest.h>

#include <limits>
#include <sstream>

#include "lrcomp/benchmark.hpp"
#include "lrcomp/estimators.hpp"
#include "lrcomp/metrics.hpp"
#include "lrcomp/simulation.hpp"

using namespace lrcomp;

namespace {

SimScenario small_scenario() {
    SimScenario s;
    s.n = 30;
    s.p = 12;
    s.r = 4;
    s.replicates = 2;
    s.seed = 99;
    return s;
}

BenchmarkOptions quick_options() {
    BenchmarkOptions o;
    o.lambda_grid_size = 3;
    o.alphas = {0.1, 0.5};
    o.n_splits = 2;
    o.solver.eps = 1e-6;
    o.solver.k_max = 300;
    return o;
}

}

TEST(GenerateComposition, RowsSumToOneAndPositive) {
    GeneratedComposition g = generate_composition_detailed(small_scenario(), 1);
    const Matrix& x = g.truth.values();
    EXPECT_GT(x.minCoeff(), 0);
    for (Index i = 0; i < x.rows(); ++i) {
        EXPECT_NEAR(x.row(i).sum(), 1.0, 1e-12);
    }
    EXPECT_GE(g.attempts, 1);
}

TEST(GenerateComposition, FactorRankBoundedByR) {
    GeneratedComposition g = generate_composition_detailed(small_scenario(), 2);
    Vector s = singular_values(g.factors);
    Index rank = 0;
    for (Index k = 0; k < s.size(); ++k) {
        rank += s[k] > 1e-10 * s[0];
    }
    EXPECT_LE(rank, 4);
    EXPECT_EQ(rank, 4);
}

TEST(GenerateComposition, DeterministicPerSeed) {
    SimScenario s = small_scenario();
    EXPECT_TRUE((generate_composition(s, 5).values().array() == generate_composition(s, 5).values().array()).all());
    EXPECT_FALSE((generate_composition(s, 5).values().array() == generate_composition(s, 6).values().array()).all());
}

TEST(SimScenario, Validation) {
    SimScenario s = small_scenario();
    s.r = 13;
    EXPECT_THROW(s.validate(), ConfigError);
    s = small_scenario();
    s.gamma = 0.5;
    EXPECT_THROW(s.validate(), ConfigError);
    s = small_scenario();
    s.p = 1;
    EXPECT_THROW(s.validate(), ConfigError);
    EXPECT_EQ(small_scenario().full_rank().r, 12);
}

TEST(GenerateCounts, DepthsMatchRowTotals) {
    SimScenario s = small_scenario();
    CompositionMatrix truth = generate_composition(s, 3);
    GeneratedCounts g = generate_counts_detailed(truth, 2, 4);
    double total = 0;
    for (Index i = 0; i < truth.n(); ++i) {
        EXPECT_EQ(g.counts.row_totals()[i], static_cast<double>(g.depths[static_cast<std::size_t>(i)]));
        EXPECT_EQ(g.depths[static_cast<std::size_t>(i)], std::max<std::int64_t>(1, std::llround(2.0 * 30 * 12 * g.shares[i])));
        total += static_cast<double>(g.depths[static_cast<std::size_t>(i)]);
    }
    EXPECT_LE(std::abs(total - 2.0 * 30 * 12), 30.0 / 2);
}

TEST(GenerateCounts, DeterministicPerSeed) {
    CompositionMatrix truth = generate_composition(small_scenario(), 3);
    EXPECT_TRUE((generate_counts(truth, 1, 8).values().array() == generate_counts(truth, 1, 8).values().array()).all());
}

// Row-wise KL from the empirical frequencies to the truth behaves like (p - 1) / (2 N_i), so it is
// largest on the shallowest row (N_i near gamma * p / 5.5). Bounds below were measured on this seed.
TEST(GenerateCounts, LargeDepthConvergesToTruth) {
    SimScenario s;
    CompositionMatrix truth = generate_composition(s, 10);
    double previous_worst = std::numeric_limits<double>::infinity();
    for (double gamma : {50.0, 500.0}) {
        GeneratedCounts g = generate_counts_detailed(truth, gamma, 11);
        CompositionMatrix mle = estimate_mle(g.counts);
        double worst = 0, mean = 0;
        for (Index i = 0; i < truth.n(); ++i) {
            const double kl = kl_row(mle.values().row(i), truth.values().row(i));
            const double depth = static_cast<double>(g.depths[static_cast<std::size_t>(i)]);
            EXPECT_LT(kl, 3.0 * static_cast<double>(s.p - 1) / (2 * depth)) << "row " << i;
            worst = std::max(worst, kl);
            mean += kl / static_cast<double>(truth.n());
        }
        EXPECT_LT(worst, previous_worst);
        EXPECT_LT(mean, 0.7 / gamma);
        if (gamma == 50.0) {
            EXPECT_LT(worst, 0.06);
        } else {
            EXPECT_LT(worst, 0.01);
        }
        previous_worst = worst;
    }
}

TEST(Benchmark, ReportShapeAndDeterminism) {
    SimScenario s = small_scenario();
    BenchmarkOptions o = quick_options();
    BenchmarkReport a = run_benchmark(s, o);
    o.jobs = 2;
    BenchmarkReport b = run_benchmark(s, o);
    EXPECT_TRUE(a.failures.empty());
    EXPECT_EQ(a.records.size(), 2u * 3u * 4u);
    std::ostringstream ra, rb;
    write_report_csv(ra, {a});
    write_report_csv(rb, {b});
    EXPECT_EQ(ra.str(), rb.str());
    EXPECT_LT(a.mean("reg", "frobenius_sq"), a.mean("zr", "frobenius_sq"));
    EXPECT_THROW(a.mean("mle", "avg_kl"), std::out_of_range);
}

TEST(Benchmark, ZeroReplicatesGiveHeaderOnly) {
    SimScenario s = small_scenario();
    s.replicates = 0;
    BenchmarkReport r = run_benchmark(s, quick_options());
    std::ostringstream out;
    write_report_csv(out, {r});
    EXPECT_EQ(out.str(), "n,p,r,gamma,seed,replicate,estimator,metric,value\n");
}

TEST(Benchmark, ScenariosDifferingInGammaShareTruth) {
    SimScenario s = small_scenario();
    SimScenario t = s;
    t.gamma = 5;
    ReplicateResult a = run_replicate(s, quick_options(), 1);
    ReplicateResult b = run_replicate(t, quick_options(), 1);
    EXPECT_TRUE((a.truth.values().array() == b.truth.values().array()).all());
    EXPECT_GT(b.counts.grand_total(), 4 * a.counts.grand_total());
}

TEST(Benchmark, MleFailuresAreRecordedNotThrown) {
    SimScenario s = small_scenario();
    s.replicates = 1;
    BenchmarkOptions o = quick_options();
    o.estimators = {EstimatorKind::mle};
    BenchmarkReport r = run_benchmark(s, o);
    // Sparse counts give the MLE zeros, so KL and Shannon cannot be computed for it.
    EXPECT_FALSE(r.failures.empty());
    EXPECT_NO_THROW(r.mean("mle", "frobenius_sq"));
}

TEST(Benchmark, SummaryCsvCarriesUnits) {
    SimScenario s = small_scenario();
    s.replicates = 1;
    BenchmarkReport r = run_benchmark(s, quick_options());
    std::ostringstream out;
    write_summary_csv(out, {r});
    EXPECT_NE(out.str().find("zr,simpson_mse,1,"), std::string::npos);
    EXPECT_NE(out.str().find("x1e-6"), std::string::npos);
}
