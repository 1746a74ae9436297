#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "lrcomp/io.hpp"
#include "lrcomp/types.hpp"

namespace fs = std::filesystem;
using namespace lrcomp;

namespace {

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("lrcomp_cli_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }

    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    void write(const std::string& name, const std::string& text) const {
        std::ofstream out(path(name));
        out << text;
    }

    std::string read(const std::string& name) const {
        std::ifstream in(path(name));
        std::stringstream buffer;
        buffer << in.rdbuf();
        return buffer.str();
    }

    long lines(const std::string& name) const {
        const std::string text = read(name);
        return static_cast<long>(std::count(text.begin(), text.end(), '\n'));
    }

    int run(const std::string& args) {
        const std::string cmd = std::string("cd '") + dir_.string() + "' && '" + LRCOMP_CLI_PATH + "' " + args + " > stdout.txt 2> stderr.txt";
        int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    fs::path dir_;
};

}

TEST_F(CliTest, EstimateMle) {
    write("c.csv", "2,3,5\n1,1,2\n");
    ASSERT_EQ(run("estimate -i c.csv -o x.csv --estimator mle"), 0);
    LabeledMatrix x = read_matrix_file(path("x.csv"));
    EXPECT_DOUBLE_EQ(x.values(0, 0), 0.2);
    EXPECT_DOUBLE_EQ(x.values(0, 1), 0.3);
    EXPECT_DOUBLE_EQ(x.values(0, 2), 0.5);
    EXPECT_DOUBLE_EQ(x.values(1, 0), 0.25);
    EXPECT_DOUBLE_EQ(x.values(1, 2), 0.5);
}

TEST_F(CliTest, EstimateZeroReplacement) {
    write("c.csv", "0,1,3\n");
    ASSERT_EQ(run("estimate -i c.csv -o x.csv --estimator zr"), 0);
    LabeledMatrix x = read_matrix_file(path("x.csv"));
    EXPECT_DOUBLE_EQ(x.values(0, 0), 1.0 / 9);
    EXPECT_DOUBLE_EQ(x.values(0, 1), 2.0 / 9);
    EXPECT_DOUBLE_EQ(x.values(0, 2), 6.0 / 9);
}

TEST_F(CliTest, MissingInputExitsTwoWithoutOutput) {
    EXPECT_EQ(run("estimate -i nope.csv -o x.csv"), 2);
    EXPECT_FALSE(fs::exists(path("x.csv")));
    EXPECT_FALSE(fs::exists(path("x.csv.tmp")));
    EXPECT_NE(read("stderr.txt").find("nope.csv"), std::string::npos);
}

TEST_F(CliTest, InvalidInputExitsTwo) {
    write("c.csv", "1,-2,3\n");
    EXPECT_EQ(run("estimate -i c.csv -o x.csv"), 2);
    EXPECT_EQ(run("estimate -i c.csv -o x.csv --estimator bogus"), 2);
    EXPECT_EQ(run("frobnicate"), 2);
}

TEST_F(CliTest, ZeroRowIsDomainError) {
    write("c.csv", "0,0,0\n1,2,3\n");
    EXPECT_EQ(run("estimate -i c.csv -o x.csv --estimator mle"), 3);
    EXPECT_EQ(run("estimate -i c.csv -o x.csv --estimator reg --lambda 0.1"), 3);
    EXPECT_EQ(run("estimate -i c.csv -o x.csv --estimator reg --lambda 0.1 --zero-rows uniform"), 0);
}

TEST_F(CliTest, RegularizedOutputRoundTripsThroughValidation) {
    write("c.csv", "id,a,b,c,d\nx,4,0,1,7\ny,0,3,3,2\nz,5,1,0,6\n");
    ASSERT_EQ(run("estimate -i c.csv -o x.csv --estimator reg --lambda 0.05 --alpha-x 0.2 --report r.json --trace t.csv"), 0);
    LabeledMatrix x = read_matrix_file(path("x.csv"));
    EXPECT_EQ(x.row_names, (std::vector<std::string>{"x", "y", "z"}));
    EXPECT_EQ(x.column_names, (std::vector<std::string>{"a", "b", "c", "d"}));
    EXPECT_NO_THROW(validate_composition(x.values, SimplexBounds{0.2, 4}));

    auto report = nlohmann::json::parse(read("r.json"));
    EXPECT_EQ(report.at("estimator"), "reg");
    EXPECT_DOUBLE_EQ(report.at("fit").at("lambda").get<double>(), 0.05);
    EXPECT_EQ(report.at("fit").at("singular_values").size(), 3u);
    const int iterations = report.at("fit").at("iterations").get<int>();
    EXPECT_EQ(lines("t.csv"), iterations + 2);
}

TEST_F(CliTest, TuneSinglePointGridEchoesPoint) {
    write("c.csv", "4,0,1,7\n0,3,3,2\n5,1,0,6\n2,2,2,2\n1,0,9,1\n");
    write("g.json", R"({"lambda": [0.02], "alpha_x": [0.3]})");
    ASSERT_EQ(run("tune -i c.csv --grid-file g.json --k-folds 5 --splits 2"), 0);
    auto sel = nlohmann::json::parse(read("selection.json"));
    EXPECT_DOUBLE_EQ(sel.at("lambda").get<double>(), 0.02);
    EXPECT_DOUBLE_EQ(sel.at("alpha_x").get<double>(), 0.3);
    EXPECT_EQ(lines("risk_table.csv"), 2);
}

TEST_F(CliTest, TuneIsDeterministicAcrossRunsAndJobs) {
    write("c.csv", "4,0,1,7\n0,3,3,2\n5,1,0,6\n2,2,2,2\n1,0,9,1\n3,3,0,4\n");
    ASSERT_EQ(run("tune -i c.csv --lambda-grid-size 3 --splits 2 --seed 5 --risk-table a.csv --selection a.json -o fit.csv"), 0);
    ASSERT_EQ(run("tune -i c.csv --lambda-grid-size 3 --splits 2 --seed 5 --risk-table b.csv --selection b.json --jobs 3"), 0);
    EXPECT_EQ(read("a.csv"), read("b.csv"));
    auto a = nlohmann::json::parse(read("a.json"));
    auto b = nlohmann::json::parse(read("b.json"));
    EXPECT_EQ(a.at("lambda"), b.at("lambda"));
    EXPECT_EQ(a.at("risk"), b.at("risk"));
    EXPECT_TRUE(fs::exists(path("fit.csv")));
    EXPECT_EQ(lines("a.csv"), 1 + 3 * 4);
}

TEST_F(CliTest, EmptyGridFileExitsTwo) {
    write("c.csv", "4,0,1,7\n0,3,3,2\n5,1,0,6\n");
    write("g.json", R"({"lambda": [], "alpha_x": []})");
    EXPECT_EQ(run("tune -i c.csv --grid-file g.json --k-folds 3"), 2);
    write("h.json", "not json");
    EXPECT_EQ(run("tune -i c.csv --grid-file h.json --k-folds 3"), 2);
    EXPECT_FALSE(fs::exists(path("selection.json")));
}

TEST_F(CliTest, SimulateIsDeterministic) {
    ASSERT_EQ(run("simulate --n 12 --p 6 --r 2 --gamma 2 --seed 3 --out-dir a"), 0);
    ASSERT_EQ(run("simulate --n 12 --p 6 --r 2 --gamma 2 --seed 3 --out-dir b"), 0);
    const std::string name = "counts_n12_p6_r2_g2_rep0.csv";
    EXPECT_EQ(read("a/" + name), read("b/" + name));
    LabeledMatrix truth = read_matrix_file(path("a/truth_n12_p6_r2_g2_rep0.csv"));
    EXPECT_NO_THROW(CompositionMatrix{truth.values});
    LabeledMatrix counts = read_matrix_file(path("a/" + name));
    EXPECT_NO_THROW(validate_counts(counts.values));
}

TEST_F(CliTest, BenchmarkWithoutReplicatesWritesHeader) {
    ASSERT_EQ(run("benchmark --replicates 0 --report r.csv --summary s.csv"), 0);
    EXPECT_EQ(read("r.csv"), "n,p,r,gamma,seed,replicate,estimator,metric,value\n");
    EXPECT_EQ(read("s.csv"), "n,p,r,gamma,seed,estimator,metric,replicates,mean,scaled_mean,units\n");
}

TEST_F(CliTest, BenchmarkReportsAreByteIdentical) {
    const std::string flags = "benchmark --n 20 --p 8 --r 2 --gamma 1 --replicates 2 --lambda-grid-size 2 --alphas 0.5 --splits 1 --eps 1e-5";
    ASSERT_EQ(run(flags + " --report a.csv --summary as.csv --tuning at.csv --scatter sc.csv"), 0);
    ASSERT_EQ(run(flags + " --report b.csv --summary bs.csv --tuning bt.csv --jobs 2"), 0);
    EXPECT_EQ(read("a.csv"), read("b.csv"));
    EXPECT_EQ(read("as.csv"), read("bs.csv"));
    EXPECT_EQ(read("at.csv"), read("bt.csv"));
    EXPECT_EQ(lines("a.csv"), 1 + 2 * 3 * 4);
    EXPECT_EQ(lines("sc.csv"), 1 + 3 * 20 * 8);
}

TEST_F(CliTest, DiversityIndices) {
    write("x.csv", "0.25,0.25,0.25,0.25\n0,1,0,0\n");
    ASSERT_EQ(run("diversity -i x.csv --index simpson -o d.csv"), 0);
    LabeledMatrix d = read_matrix_file(path("d.csv"));
    EXPECT_EQ(d.column_names, (std::vector<std::string>{"simpson"}));
    EXPECT_DOUBLE_EQ(d.values(0, 0), 0.25);
    EXPECT_DOUBLE_EQ(d.values(1, 0), 1.0);

    write("u.csv", "0.25,0.25,0.25,0.25\n");
    ASSERT_EQ(run("diversity -i u.csv -o e.csv"), 0);
    LabeledMatrix e = read_matrix_file(path("e.csv"));
    EXPECT_NEAR(e.values(0, 0), std::log(4.0), 1e-15);
    EXPECT_DOUBLE_EQ(e.values(0, 1), 0.25);
}

TEST_F(CliTest, ShannonOnZeroExitsThreeNamingRow) {
    write("x.csv", "sample,a,b\nfirst,0.5,0.5\nsecond,1,0\n");
    EXPECT_EQ(run("diversity -i x.csv --index shannon"), 3);
    EXPECT_NE(read("stderr.txt").find("second"), std::string::npos);
}
