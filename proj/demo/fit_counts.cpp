// Simulates one small data set, tunes the regularized estimator by cross-validation and compares
// it with zero replacement.

#include <iostream>

#include "lrcomp/estimators.hpp"
#include "lrcomp/metrics.hpp"
#include "lrcomp/simulation.hpp"
#include "lrcomp/tuning.hpp"

int main() {
    using namespace lrcomp;

    SimScenario scenario;
    scenario.n = 40;
    scenario.p = 20;
    scenario.r = 5;
    scenario.gamma = 1;

    CompositionMatrix truth = generate_composition(scenario, derive_seed(scenario.seed, {0, 0}));
    CountMatrix counts = generate_counts(truth, scenario.gamma, derive_seed(scenario.seed, {0, 1}));
    std::cout << "zero counts: " << (counts.values().array() == 0).count() << " of " << counts.values().size() << '\n';

    TuningGrid grid = default_tuning_grid(counts, 6, {0.1, 0.5});
    CvPlan plan = make_cv_plan(counts, 5, 3, grid, 7);
    auto [choice, report] = tune_and_fit(counts, plan);
    std::cout << "selected lambda " << choice.lambda << ", alpha_x " << choice.alpha_x << " after "
              << report.iterations << " iterations\n";

    CompositionMatrix zr = estimate_zero_replacement(counts);
    const double n = static_cast<double>(counts.n());
    std::cout << "squared Frobenius: regularized " << frobenius_sq(truth, report.estimate) << ", zero replacement "
              << frobenius_sq(truth, zr) << '\n';
    std::cout << "average KL:        regularized " << kl_matrix(truth, report.estimate) / n << ", zero replacement "
              << kl_matrix(truth, zr) / n << '\n';
}
