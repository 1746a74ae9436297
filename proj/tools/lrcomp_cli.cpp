// Command-line front end: estimate, tune, simulate, benchmark, diversity.
//
// Exit codes: 0 success, 2 input or configuration error, 3 domain error, 4 numerical failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "lrcomp/benchmark.hpp"
#include "lrcomp/estimators.hpp"
#include "lrcomp/io.hpp"
#include "lrcomp/metrics.hpp"
#include "lrcomp/optimizer.hpp"
#include "lrcomp/simulation.hpp"
#include "lrcomp/tuning.hpp"

namespace {

using nlohmann::json;
using namespace lrcomp;

constexpr int exit_ok = 0;
constexpr int exit_input = 2;
constexpr int exit_domain = 3;
constexpr int exit_numerical = 4;

constexpr std::uint64_t default_seed = 20240501;

struct CommonInput {
    std::string input;
    std::string delimiter = ",";
};

CsvOptions csv_options(const std::string& delimiter) {
    CsvOptions opts;
    if (delimiter == "tab" || delimiter == "\\t" || delimiter == "\t") {
        opts.delimiter = '\t';
    } else if (delimiter.size() == 1) {
        opts.delimiter = delimiter[0];
    } else {
        throw ConfigError("delimiter must be a single character or 'tab'");
    }
    return opts;
}

json vector_json(const Vector& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) {
        out.push_back(v[i]);
    }
    return out;
}

void write_json(const std::string& path, const json& doc) {
    write_file_atomically(path, [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
}

json fit_report_json(const FitReport& report) {
    json doc;
    doc["lambda"] = report.lambda;
    doc["alpha_x"] = report.bounds.alpha_x;
    doc["beta_x"] = report.bounds.beta_x;
    doc["iterations"] = report.iterations;
    doc["converged"] = report.converged;
    doc["backtracks"] = report.backtracks;
    doc["clamp_events"] = report.clamp_events;
    doc["objective_trace"] = report.objective_trace;
    doc["final_objective"] = report.objective_trace.empty() ? 0.0 : report.objective_trace.back();
    doc["final_curvature"] = report.curvature_trace.empty() ? 0.0 : report.curvature_trace.back();
    doc["singular_values"] = vector_json(report.final_singular_values);
    return doc;
}

struct SolverFlags {
    std::optional<double> lambda;
    double alpha_x = 0.1;
    std::optional<double> beta_x;
    int max_iter = 2000;
    double eps = 1e-7;
    std::string zero_rows = "reject";

    void add(CLI::App* cmd, bool with_lambda) {
        if (with_lambda) {
            cmd->add_option("--lambda", lambda, "Nuclear-norm weight (default: closed-form level from --delta)");
            cmd->add_option("--alpha-x", alpha_x, "Lower bound scale: entries >= alpha_x / p")->capture_default_str();
        }
        cmd->add_option("--beta-x", beta_x, "Upper bound scale: entries <= beta_x / p (default p, i.e. no upper bound)");
        cmd->add_option("--max-iter", max_iter, "Maximum solver iterations")->capture_default_str();
        cmd->add_option("--eps", eps, "Relative objective change for convergence")->capture_default_str();
        cmd->add_option("--zero-rows", zero_rows, "Zero-total rows: reject or start from the uniform row")
            ->check(CLI::IsMember({"reject", "uniform"}))
            ->capture_default_str();
    }

    SolverConfig config(Index p) const {
        SolverConfig cfg;
        cfg.bounds = SimplexBounds{alpha_x, beta_x.value_or(static_cast<double>(p))};
        cfg.k_max = max_iter;
        cfg.eps = eps;
        cfg.uniform_zero_rows = zero_rows == "uniform";
        return cfg;
    }
};

// estimate ---------------------------------------------------------------

struct EstimateArgs {
    CommonInput in;
    std::string output;
    std::string report;
    std::string trace;
    std::string estimator = "reg";
    SolverFlags solver;
    double delta = 7;
    std::optional<double> svt_threshold;
    std::optional<long> svt_rank;
    std::uint64_t seed = default_seed;
};

int run_estimate(const EstimateArgs& args) {
    auto csv = csv_options(args.in.delimiter);
    LabeledMatrix raw = read_matrix_file(args.in.input, csv);
    CountMatrix counts = validate_counts(raw.values);
    EstimatorKind kind = parse_estimator(args.estimator);

    json doc;
    doc["estimator"] = to_string(kind);
    doc["n"] = counts.n();
    doc["p"] = counts.p();
    doc["seed"] = args.seed;

    CompositionMatrix estimate;
    std::optional<FitReport> fit_report;
    if (kind == EstimatorKind::regularized) {
        SolverConfig cfg = args.solver.config(counts.p());
        cfg.lambda = args.solver.lambda ? *args.solver.lambda : default_lambda(counts, cfg.bounds, args.delta);
        fit_report = estimate_regularized(counts, cfg);
        estimate = fit_report->estimate;
        doc["fit"] = fit_report_json(*fit_report);
    } else {
        EstimatorOptions opts;
        opts.svt_threshold = args.svt_threshold;
        if (args.svt_rank) {
            opts.svt_rank = static_cast<Index>(*args.svt_rank);
        }
        if (kind == EstimatorKind::svt && !opts.svt_rank && !opts.svt_threshold) {
            opts.svt_threshold = svt_default_threshold(counts);
        }
        estimate = lrcomp::estimate(kind, counts, opts);
        if (opts.svt_threshold && kind == EstimatorKind::svt) {
            doc["svt_threshold"] = *opts.svt_threshold;
        }
        doc["has_zeros"] = estimate.has_zeros();
    }
    doc["singular_values"] = vector_json(singular_value_profile(estimate.values()));

    write_file_atomically(args.output, [&](std::ostream& out) {
        write_matrix(out, estimate.values(), raw.row_names, raw.column_names, csv.delimiter);
    });
    if (!args.report.empty()) {
        write_json(args.report, doc);
    }
    if (!args.trace.empty() && fit_report) {
        write_file_atomically(args.trace, [&](std::ostream& out) { write_trace_csv(out, *fit_report); });
    }
    return exit_ok;
}

// tune -------------------------------------------------------------------

struct TuneArgs {
    CommonInput in;
    int k_folds = 5;
    int splits = 5;
    std::string grid_file;
    int lambda_grid_size = 8;
    std::uint64_t seed = default_seed;
    int jobs = 1;
    std::string cv_score = "held-out";
    std::string risk_table = "risk_table.csv";
    std::string selection = "selection.json";
    std::string output;
    SolverFlags solver;
};

TuningGrid read_grid_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open grid file '" + path + "'");
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ValidationError("grid file is not valid JSON: " + std::string(e.what()));
    }
    TuningGrid grid;
    try {
        if (doc.contains("lambda")) {
            grid.lambdas = doc.at("lambda").get<std::vector<double>>();
        }
        if (doc.contains("alpha_x")) {
            grid.alphas = doc.at("alpha_x").get<std::vector<double>>();
        }
    } catch (const json::exception& e) {
        throw ValidationError("grid file entries must be arrays of numbers: " + std::string(e.what()));
    }
    if (grid.lambdas.empty() || grid.alphas.empty()) {
        throw ConfigError("grid file must give nonempty 'lambda' and 'alpha_x' arrays");
    }
    return grid;
}

int run_tune(const TuneArgs& args) {
    auto csv = csv_options(args.in.delimiter);
    LabeledMatrix raw = read_matrix_file(args.in.input, csv);
    CountMatrix counts = validate_counts(raw.values);

    TuningGrid grid = args.grid_file.empty() ? default_tuning_grid(counts, args.lambda_grid_size) : read_grid_file(args.grid_file);
    CvPlan plan = make_cv_plan(counts, args.k_folds, args.splits, grid, args.seed, parse_cv_score(args.cv_score));
    SolverConfig base = args.solver.config(counts.p());
    TuningResult result = select_tuning(counts, plan, base, args.jobs);

    json doc;
    doc["lambda"] = result.lambda;
    doc["alpha_x"] = result.alpha_x;
    doc["risk"] = result.risk;
    doc["k_folds"] = plan.k_folds;
    doc["splits"] = plan.n_splits;
    doc["seed"] = plan.seed;
    doc["cv_score"] = to_string(plan.score);
    doc["grid"] = {{"lambda", plan.grid.lambdas}, {"alpha_x", plan.grid.alphas}};

    std::optional<FitReport> final_fit;
    if (!args.output.empty()) {
        SolverConfig cfg = base;
        cfg.lambda = result.lambda;
        cfg.bounds = SimplexBounds::lower_only(result.alpha_x, counts.p());
        final_fit = fit(counts, cfg);
        doc["fit"] = fit_report_json(*final_fit);
    }

    write_file_atomically(args.risk_table, [&](std::ostream& out) {
        out << "lambda,alpha_x,risk\n";
        for (const auto& e : result.risk_table) {
            out << format_number(e.lambda) << ',' << format_number(e.alpha_x) << ',' << format_number(e.risk) << '\n';
        }
    });
    write_json(args.selection, doc);
    if (final_fit) {
        write_file_atomically(args.output, [&](std::ostream& out) {
            write_matrix(out, final_fit->estimate.values(), raw.row_names, raw.column_names, csv.delimiter);
        });
    }
    return exit_ok;
}

// simulate / benchmark ---------------------------------------------------

struct ScenarioFlags {
    long n = 100;
    std::vector<long> p{50};
    long r = 20;
    bool full_rank = false;
    std::vector<double> gamma{1};
    int replicates = 10;
    std::uint64_t seed = default_seed;

    void add(CLI::App* cmd, int default_replicates) {
        replicates = default_replicates;
        cmd->add_option("--n", n, "Number of samples")->capture_default_str();
        cmd->add_option("--p", p, "Number of taxa (several values allowed)")->capture_default_str();
        cmd->add_option("--r", r, "Rank of the truth")->capture_default_str();
        cmd->add_flag("--full-rank", full_rank, "Use r = min(n, p)");
        cmd->add_option("--gamma", gamma, "Depth multiplier(s); N_i = gamma * n * p * R_i")->capture_default_str();
        cmd->add_option("--replicates", replicates, "Replicates per scenario")->capture_default_str();
        cmd->add_option("--seed", seed, "Base random seed")->capture_default_str();
    }

    std::vector<SimScenario> scenarios() const {
        std::vector<SimScenario> out;
        for (long pp : p) {
            for (double g : gamma) {
                SimScenario s;
                s.n = n;
                s.p = pp;
                s.r = full_rank ? std::min(n, pp) : r;
                s.gamma = g;
                s.replicates = replicates;
                s.seed = seed;
                s.validate();
                out.push_back(s);
            }
        }
        return out;
    }
};

struct SimulateArgs {
    ScenarioFlags scenario;
    std::string out_dir = ".";
};

int run_simulate(const SimulateArgs& args) {
    auto scenarios = args.scenario.scenarios();
    std::filesystem::create_directories(args.out_dir);
    for (const auto& s : scenarios) {
        for (int k = 0; k < s.replicates; ++k) {
            const auto rep = static_cast<std::uint64_t>(k);
            CompositionMatrix truth = generate_composition(s, derive_seed(s.seed, {rep, 0}));
            CountMatrix counts = generate_counts(truth, s.gamma, derive_seed(s.seed, {rep, 1}));
            std::string tag = "n" + std::to_string(s.n) + "_p" + std::to_string(s.p) + "_r" + std::to_string(s.r) + "_g"
                + format_number(s.gamma) + "_rep" + std::to_string(k);
            std::filesystem::path dir(args.out_dir);
            write_file_atomically((dir / ("truth_" + tag + ".csv")).string(),
                                  [&](std::ostream& out) { write_matrix(out, truth.values(), {}, {}); });
            write_file_atomically((dir / ("counts_" + tag + ".csv")).string(),
                                  [&](std::ostream& out) { write_matrix(out, counts.values(), {}, {}); });
        }
    }
    return exit_ok;
}

struct BenchmarkArgs {
    ScenarioFlags scenario;
    std::vector<std::string> estimators{"reg", "zr", "svt"};
    int lambda_grid_size = 8;
    std::vector<double> alphas = default_alpha_grid();
    int k_folds = 5;
    int splits = 5;
    std::string cv_score = "held-out";
    std::string svt = "oracle";
    int max_iter = 2000;
    double eps = 1e-7;
    int jobs = 1;
    std::string report = "benchmark_report.csv";
    std::string summary;
    std::string tuning;
    std::string failures;
    std::string scatter;
};

int run_benchmark_command(const BenchmarkArgs& args) {
    auto scenarios = args.scenario.scenarios();
    BenchmarkOptions options;
    options.estimators.clear();
    for (const auto& e : args.estimators) {
        options.estimators.push_back(parse_estimator(e));
    }
    options.lambda_grid_size = args.lambda_grid_size;
    options.alphas = args.alphas;
    options.k_folds = args.k_folds;
    options.n_splits = args.splits;
    options.cv_score = parse_cv_score(args.cv_score);
    options.svt = args.svt == "heuristic" ? SvtSelection::heuristic : SvtSelection::oracle;
    options.solver.k_max = args.max_iter;
    options.solver.eps = args.eps;
    options.jobs = args.jobs;
    options.solver.validate();

    std::vector<BenchmarkReport> reports;
    for (const auto& s : scenarios) {
        reports.push_back(run_benchmark(s, options));
    }

    write_file_atomically(args.report, [&](std::ostream& out) { write_report_csv(out, reports); });
    if (!args.summary.empty()) {
        write_file_atomically(args.summary, [&](std::ostream& out) { write_summary_csv(out, reports); });
    }
    if (!args.tuning.empty()) {
        write_file_atomically(args.tuning, [&](std::ostream& out) { write_tuning_csv(out, reports); });
    }
    if (!args.failures.empty()) {
        write_file_atomically(args.failures, [&](std::ostream& out) { write_failures_csv(out, reports); });
    }
    if (!args.scatter.empty() && !scenarios.empty() && scenarios.front().replicates > 0) {
        ReplicateResult first = run_replicate(scenarios.front(), options, 0);
        write_file_atomically(args.scatter, [&](std::ostream& out) { write_scatter_csv(out, first); });
    }
    for (const auto& rep : reports) {
        for (const auto& f : rep.failures) {
            std::cerr << "warning: replicate " << f.replicate << " (" << f.estimator << "): " << f.message << '\n';
        }
    }
    return exit_ok;
}

// diversity --------------------------------------------------------------

struct DiversityArgs {
    CommonInput in;
    std::string index = "both";
    std::string output;
};

int run_diversity(const DiversityArgs& args) {
    auto csv = csv_options(args.in.delimiter);
    LabeledMatrix raw = read_matrix_file(args.in.input, csv);
    CompositionMatrix comp(raw.values);

    const bool want_shannon = args.index != "simpson";
    const bool want_simpson = args.index != "shannon";
    Vector shannon, simpson;
    if (want_shannon) {
        for (Index i = 0; i < comp.n(); ++i) {
            if ((comp.values().row(i).array() <= 0).any()) {
                throw DomainError("Shannon index undefined: row " + std::to_string(i + 1) + " ('" + raw.row_names[static_cast<std::size_t>(i)]
                    + "') contains a zero");
            }
        }
        shannon = shannon_index(comp);
    }
    if (want_simpson) {
        simpson = simpson_index(comp);
    }

    auto write = [&](std::ostream& out) {
        out << "sample_id";
        if (want_shannon) {
            out << csv.delimiter << "shannon";
        }
        if (want_simpson) {
            out << csv.delimiter << "simpson";
        }
        out << '\n';
        for (Index i = 0; i < comp.n(); ++i) {
            out << raw.row_names[static_cast<std::size_t>(i)];
            if (want_shannon) {
                out << csv.delimiter << format_number(shannon[i]);
            }
            if (want_simpson) {
                out << csv.delimiter << format_number(simpson[i]);
            }
            out << '\n';
        }
    };
    if (args.output.empty()) {
        write(std::cout);
    } else {
        write_file_atomically(args.output, write);
    }
    return exit_ok;
}

template <typename Function>
int guarded(Function fn) {
    try {
        return fn();
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_domain;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    } catch (const GenerationError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_input;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_input;
    }
}

}

int main(int argc, char** argv) {
    CLI::App app{"Low-rank composition estimation from microbiome count matrices"};
    app.require_subcommand(1);

    EstimateArgs est;
    auto* cmd_est = app.add_subcommand("estimate", "Estimate a composition matrix from counts");
    cmd_est->add_option("-i,--input", est.in.input, "Counts CSV")->required();
    cmd_est->add_option("-o,--output", est.output, "Composition CSV to write")->required();
    cmd_est->add_option("--report", est.report, "Fit report JSON to write");
    cmd_est->add_option("--trace", est.trace, "Objective trace CSV to write (reg only)");
    cmd_est->add_option("--estimator", est.estimator, "mle, zr, svt or reg")
        ->check(CLI::IsMember({"mle", "zr", "svt", "reg"}))
        ->capture_default_str();
    est.solver.add(cmd_est, true);
    cmd_est->add_option("--delta", est.delta, "Constant of the closed-form lambda")->capture_default_str();
    cmd_est->add_option("--svt-threshold", est.svt_threshold, "Singular value threshold for svt");
    cmd_est->add_option("--svt-rank", est.svt_rank, "Rank kept by svt (overrides the threshold)");
    cmd_est->add_option("--seed", est.seed, "Random seed (recorded; estimation is deterministic)")->capture_default_str();
    cmd_est->add_option("--delimiter", est.in.delimiter, "Field delimiter (single character or 'tab')")->capture_default_str();

    TuneArgs tune;
    auto* cmd_tune = app.add_subcommand("tune", "Cross-validate (lambda, alpha_x) for the regularized estimator");
    cmd_tune->add_option("-i,--input", tune.in.input, "Counts CSV")->required();
    cmd_tune->add_option("--k-folds", tune.k_folds, "K of the K-fold scheme")->capture_default_str();
    cmd_tune->add_option("--splits", tune.splits, "Number of random splits")->capture_default_str();
    cmd_tune->add_option("--grid-file", tune.grid_file, "JSON with 'lambda' and 'alpha_x' arrays");
    cmd_tune->add_option("--lambda-grid-size", tune.lambda_grid_size, "Size of the default lambda grid")->capture_default_str();
    cmd_tune->add_option("--seed", tune.seed, "Random seed for the splits")->capture_default_str();
    cmd_tune->add_option("--jobs", tune.jobs, "Concurrent grid evaluations")->capture_default_str();
    cmd_tune->add_option("--cv-score", tune.cv_score, "held-out or full-row")
        ->check(CLI::IsMember({"held-out", "full-row"}))
        ->capture_default_str();
    cmd_tune->add_option("--risk-table", tune.risk_table, "Risk table CSV to write")->capture_default_str();
    cmd_tune->add_option("--selection", tune.selection, "Selection JSON to write")->capture_default_str();
    cmd_tune->add_option("-o,--output", tune.output, "Also refit at the selection and write the composition CSV");
    cmd_tune->add_option("--delimiter", tune.in.delimiter, "Field delimiter")->capture_default_str();
    tune.solver.add(cmd_tune, false);

    SimulateArgs sim;
    auto* cmd_sim = app.add_subcommand("simulate", "Write simulated truths and counts");
    sim.scenario.add(cmd_sim, 1);
    cmd_sim->add_option("--out-dir", sim.out_dir, "Output directory")->capture_default_str();

    BenchmarkArgs bench;
    auto* cmd_bench = app.add_subcommand("benchmark", "Compare estimators on simulated data");
    bench.scenario.add(cmd_bench, 10);
    cmd_bench->add_option("--estimators", bench.estimators, "Estimators to compare")->capture_default_str();
    cmd_bench->add_option("--lambda-grid-size", bench.lambda_grid_size, "Lambda values in the CV grid")->capture_default_str();
    cmd_bench->add_option("--alphas", bench.alphas, "alpha_x values in the CV grid")->capture_default_str();
    cmd_bench->add_option("--k-folds", bench.k_folds, "K of the K-fold scheme")->capture_default_str();
    cmd_bench->add_option("--splits", bench.splits, "Number of random CV splits")->capture_default_str();
    cmd_bench->add_option("--cv-score", bench.cv_score, "held-out or full-row")
        ->check(CLI::IsMember({"held-out", "full-row"}))
        ->capture_default_str();
    cmd_bench->add_option("--svt", bench.svt, "SVT threshold choice: oracle or heuristic")
        ->check(CLI::IsMember({"oracle", "heuristic"}))
        ->capture_default_str();
    cmd_bench->add_option("--max-iter", bench.max_iter, "Maximum solver iterations")->capture_default_str();
    cmd_bench->add_option("--eps", bench.eps, "Solver convergence tolerance")->capture_default_str();
    cmd_bench->add_option("--jobs", bench.jobs, "Concurrent replicates")->capture_default_str();
    cmd_bench->add_option("--report", bench.report, "Long-format report CSV")->capture_default_str();
    cmd_bench->add_option("--summary", bench.summary, "Summary CSV (table layout)");
    cmd_bench->add_option("--tuning", bench.tuning, "Per-replicate tuning CSV");
    cmd_bench->add_option("--failures", bench.failures, "Failure log CSV");
    cmd_bench->add_option("--scatter", bench.scatter, "Truth/estimate pairs of replicate 0 of the first scenario");

    DiversityArgs div;
    auto* cmd_div = app.add_subcommand("diversity", "Shannon and Simpson indices per sample");
    cmd_div->add_option("-i,--input", div.in.input, "Composition CSV")->required();
    cmd_div->add_option("--index", div.index, "shannon, simpson or both")
        ->check(CLI::IsMember({"shannon", "simpson", "both"}))
        ->capture_default_str();
    cmd_div->add_option("-o,--output", div.output, "Output CSV (default: standard output)");
    cmd_div->add_option("--delimiter", div.in.delimiter, "Field delimiter")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? exit_ok : exit_input;
    }

    if (cmd_est->parsed()) {
        return guarded([&] { return run_estimate(est); });
    }
    if (cmd_tune->parsed()) {
        return guarded([&] { return run_tune(tune); });
    }
    if (cmd_sim->parsed()) {
        return guarded([&] { return run_simulate(sim); });
    }
    if (cmd_bench->parsed()) {
        return guarded([&] { return run_benchmark_command(bench); });
    }
    return guarded([&] { return run_diversity(div); });
}
