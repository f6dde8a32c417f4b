#include "ctt/basis.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace ctt;

TEST(Basis, AffineAtTwo) {
    auto v = eval_features(FeatureBasis::affine(), 2.0).values;
    ASSERT_EQ(v.size(), 2);
    EXPECT_EQ(v(0), 1.0);
    EXPECT_EQ(v(1), 2.0);
}

TEST(Basis, ReluAbsAtMinusThree) {
    auto v = eval_features(FeatureBasis::relu_abs(), -3.0).values;
    ASSERT_EQ(v.size(), 3);
    EXPECT_EQ(v(0), 1.0);
    EXPECT_EQ(v(1), -3.0);
    EXPECT_EQ(v(2), 3.0);
    auto z = eval_features(FeatureBasis::relu_abs(), 0.0, true);
    EXPECT_EQ(z.derivs(2), 0.0);
}

TEST(Basis, DerivativesMatchCentralDifferences) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    const double h = 1e-5;
    for (auto b : {FeatureBasis::quadratic(), FeatureBasis::affine(), FeatureBasis::monomial(4),
                   FeatureBasis::relu_abs()}) {
        for (int s = 0; s < 50; ++s) {
            double x = u(rng);
            if (std::abs(x) < 1e-3) x += 0.01;
            auto f = eval_features(b, x, true);
            auto fp = eval_features(b, x + h).values, fm = eval_features(b, x - h).values;
            for (Eigen::Index i = 0; i < f.values.size(); ++i) {
                const double fd = (fp(i) - fm(i)) / (2 * h);
                EXPECT_NEAR(f.derivs(i), fd, 1e-6 * std::max(1.0, std::abs(fd))) << b.name() << " i=" << i;
            }
        }
    }
}

TEST(Basis, ConstantFirstAndIdentity) {
    for (auto b : {FeatureBasis::affine(), FeatureBasis::quadratic(), FeatureBasis::relu_abs(),
                   FeatureBasis::monomial(3)}) {
        auto v = b.eval(0.37);
        EXPECT_EQ(v(0), 1.0);
        EXPECT_EQ(v(b.identity_index()), 0.37);
    }
}

TEST(Basis, FeatureOuter) {
    Matrix m = feature_outer(FeatureBasis::affine(), 0.0);
    EXPECT_EQ(m(0, 0), 1.0);
    EXPECT_EQ(m(0, 1), 0.0);
    EXPECT_EQ(m(1, 0), 0.0);
    EXPECT_EQ(m(1, 1), 0.0);

    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd;
    for (auto b : {FeatureBasis::quadratic(), FeatureBasis::relu_abs(), FeatureBasis::monomial(5)}) {
        const double x = nd(rng);
        Matrix o = feature_outer(b, x);
        Vector v = b.eval(x);
        EXPECT_NEAR(o.trace(), v.squaredNorm(), 1e-12 * v.squaredNorm());
        for (Eigen::Index i = 0; i < v.size(); ++i)
            for (Eigen::Index j = 0; j < v.size(); ++j) EXPECT_EQ(o(i, j), v(i) * v(j));
        EXPECT_EQ((o - o.transpose()).norm(), 0.0);
        Eigen::SelfAdjointEigenSolver<Matrix> es(o);
        EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12 * v.squaredNorm());
    }
}

TEST(Basis, LipschitzBoundHoldsOnSampledQuotients) {
    std::mt19937_64 rng(3);
    const double radius = 1.5;
    std::uniform_real_distribution<double> u(-radius, radius);
    for (auto b : {FeatureBasis::affine(), FeatureBasis::quadratic(), FeatureBasis::relu_abs(),
                   FeatureBasis::monomial(4)}) {
        const double lip = b.lipschitz_bound(radius);
        for (int s = 0; s < 500; ++s) {
            const double x = u(rng), y = u(rng);
            if (x == y) continue;
            const double q = (b.eval(x) - b.eval(y)).norm() / std::abs(x - y);
            EXPECT_LE(q, lip * (1 + 1e-12)) << b.name();
        }
        EXPECT_EQ(b.eval(0.3), b.eval(0.3));
    }
}

TEST(Basis, Names) {
    EXPECT_EQ(FeatureBasis::from_name("monomial:3"), FeatureBasis::monomial(3));
    EXPECT_EQ(FeatureBasis::from_name("relu_abs").size(), 3u);
    EXPECT_EQ(FeatureBasis::monomial(3).name(), "monomial:3");
    EXPECT_THROW((void)FeatureBasis::from_name("legendre"), std::invalid_argument);
    EXPECT_THROW((void)FeatureBasis::from_name("monomial:x"), std::invalid_argument);
}
