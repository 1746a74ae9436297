#include <gtest/gtest.h>

#include <cmath>

#include "lrcomp/metrics.hpp"
#include "test_support.hpp"

using namespace lrcomp;

namespace {

Matrix row(std::initializer_list<double> values) {
    Matrix m(1, static_cast<Index>(values.size()));
    Index j = 0;
    for (double v : values) {
        m(0, j++) = v;
    }
    return m;
}

}

TEST(KlMatrix, ClosedForm) {
    EXPECT_NEAR(kl_matrix(row({0.5, 0.5}), row({0.25, 0.75})), 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3), 1e-15);
    EXPECT_NEAR(kl_matrix(row({0.5, 0.5}), row({0.25, 0.75})), 0.14384, 1e-5);
}

TEST(KlMatrix, ZeroForIdenticalAndNonnegative) {
    Rng rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        SimplexBounds b{0.1, 3};
        Matrix a = fixtures::random_feasible(rng, 4, 6, b);
        Matrix c = fixtures::random_feasible(rng, 4, 6, b);
        EXPECT_EQ(kl_matrix(a, a), 0.0);
        EXPECT_GT(kl_matrix(a, c), 0.0);
    }
}

TEST(KlMatrix, ZeroTruthEntriesAreSkipped) {
    EXPECT_NEAR(kl_matrix(row({0, 1}), row({0.5, 0.5})), std::log(2.0), 1e-15);
}

TEST(KlMatrix, ZeroEstimateUnderPositiveTruthThrows) {
    Matrix truth(2, 2), est(2, 2);
    truth << 0.5, 0.5, 0.5, 0.5;
    est << 0.5, 0.5, 1, 0;
    try {
        kl_matrix(truth, est);
        FAIL();
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
    }
}

TEST(Frobenius, Examples) {
    EXPECT_EQ(frobenius_sq(row({1, 0}), row({0, 1})), 2.0);
    EXPECT_EQ(frobenius_sq(row({0.3, 0.7}), row({0.3, 0.7})), 0.0);
    Rng rng(42);
    Matrix a = fixtures::random_matrix(rng, 3, 4), c = fixtures::random_matrix(rng, 3, 4);
    EXPECT_EQ(frobenius_sq(a, c), frobenius_sq(c, a));
    EXPECT_NEAR(frobenius_sq_scaled(a, c), 4.0 / 3.0 * frobenius_sq(a, c), 1e-12);
}

TEST(Shannon, Examples) {
    EXPECT_NEAR(shannon_index(Matrix::Constant(1, 5, 0.2))[0], std::log(5.0), 1e-14);
    EXPECT_NEAR(shannon_index(row({0.25, 0.75}))[0], 0.5623, 1e-4);
    EXPECT_THROW(shannon_index(row({0, 1})), DomainError);
}

TEST(Shannon, DecreasesTowardDegenerateRow) {
    const int p = 4;
    double previous = std::log(static_cast<double>(p));
    for (double eps : {0.9, 0.5, 0.1, 0.01, 1e-4}) {
        Matrix r = Matrix::Constant(1, p, eps / (p - 1));
        r(0, 0) = 1 - eps;
        double h = shannon_index(r)[0];
        EXPECT_LT(h, previous);
        previous = h;
    }
    EXPECT_LT(previous, 0.01);
}

TEST(Simpson, ExamplesAndRange) {
    EXPECT_NEAR(simpson_index(Matrix::Constant(1, 4, 0.25))[0], 0.25, 1e-15);
    EXPECT_EQ(simpson_index(row({0, 1, 0}))[0], 1.0);
    Rng rng(43);
    Matrix x = fixtures::random_feasible(rng, 20, 7, SimplexBounds{0, 7});
    Vector s = simpson_index(x);
    EXPECT_GE(s.minCoeff(), 1.0 / 7 - 1e-15);
    EXPECT_LE(s.maxCoeff(), 1.0 + 1e-15);
}

TEST(Shannon, RangeOnFeasibleRows) {
    Rng rng(44);
    Matrix x = fixtures::random_feasible(rng, 20, 7, SimplexBounds{0.05, 7});
    Vector h = shannon_index(x);
    EXPECT_GE(h.minCoeff(), 0);
    EXPECT_LE(h.maxCoeff(), std::log(7.0) + 1e-14);
}

TEST(IndexMse, Examples) {
    Vector z = Vector::Zero(2), o = Vector::Ones(2);
    EXPECT_EQ(index_mse(z, z), 0.0);
    EXPECT_EQ(index_mse(z, o), 1.0);
    EXPECT_EQ(index_mse(o, z), 1.0);
    EXPECT_THROW(index_mse(z, Vector::Zero(3)), ValidationError);
}

TEST(SingularValueProfile, Examples) {
    Vector s = singular_value_profile(Matrix::Identity(3, 3));
    EXPECT_NEAR((s - Vector::Ones(3)).norm(), 0, 1e-14);
    Vector a(3), b(4);
    a << 1, 2, 2;
    b << 1, 0, 1, 1;
    Vector r = singular_value_profile(a * b.transpose());
    EXPECT_NEAR(r[0], a.norm() * b.norm(), 1e-12);
    EXPECT_LT(r.tail(r.size() - 1).maxCoeff(), 1e-12);
    Rng rng(45);
    Vector q = singular_value_profile(fixtures::random_matrix(rng, 6, 9));
    EXPECT_EQ(q.size(), 6);
    for (Index k = 1; k < q.size(); ++k) {
        EXPECT_LE(q[k], q[k - 1]);
    }
}
