#include "ctt/model.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace ctt;

namespace {

DenseTensor random_layer(std::size_t p, std::size_t n, double scale, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, scale);
    Shape s{p};
    for (std::size_t k = 0; k < p; ++k) s.push_back(n);
    std::vector<double> v(shape_size(s));
    for (auto& e : v) e = nd(rng);
    return DenseTensor(s, std::move(v));
}

Vector random_vector(Eigen::Index n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
    return v;
}

CTTModel random_model(std::size_t d, std::size_t depth, FeatureBasis b, std::mt19937_64& rng, double scale = 0.3) {
    std::vector<CTTLayer> layers;
    for (std::size_t k = 0; k < depth; ++k) layers.emplace_back(random_layer(d, b.size(), scale, rng));
    return CTTModel(b, Lift::identity(d), std::move(layers), Retraction::first_slots(1, d));
}

}  // namespace

TEST(Lift, BuiltInKinds) {
    Vector x(2);
    x << 3.0, -4.0;
    EXPECT_EQ(Lift::identity(2).apply(x), x);
    Vector z = Lift::zero_pad(2, 4).apply(x);
    EXPECT_EQ(z, (Vector(4) << 3.0, -4.0, 0.0, 0.0).finished());
    Vector f = Lift::first_slot_zero(2).apply(x);
    EXPECT_EQ(f, (Vector(3) << 0.0, 3.0, -4.0).finished());
    Vector u = Lift::unit_first(2).apply(x);
    EXPECT_EQ(u, (Vector(3) << 1.0, 3.0, -4.0).finished());
    for (auto l : {Lift::identity(3), Lift::zero_pad(3, 5), Lift::first_slot_zero(3)}) {
        Eigen::JacobiSVD<Matrix> svd(l.matrix);
        EXPECT_NEAR(svd.singularValues()(0), 1.0, 1e-15);
    }
    Retraction r = Retraction::select({2, 0}, 3);
    EXPECT_EQ(r.apply(f), (Vector(2) << -4.0, 0.0).finished());
    EXPECT_NEAR(Eigen::JacobiSVD<Matrix>(r.matrix()).singularValues()(0), 1.0, 1e-15);
    EXPECT_THROW((void)Retraction::select({3}, 3), std::invalid_argument);
}

TEST(LayerEval, ZeroLayer) {
    auto l = zero_layer(3, 2);
    std::mt19937_64 rng(1);
    Vector h = random_vector(3, rng);
    EXPECT_EQ(layer_eval(l, FeatureBasis::affine(), h).norm(), 0.0);
    EXPECT_EQ(layer_jacobian(l, FeatureBasis::affine(), h).norm(), 0.0);
}

TEST(LayerEval, DenseMatchesExplicitSum) {
    std::mt19937_64 rng(2);
    auto basis = FeatureBasis::quadratic();
    CTTLayer l(random_layer(2, 3, 1.0, rng));
    Vector h = random_vector(2, rng);
    Vector a = basis.eval(h(0)), b = basis.eval(h(1));
    for (std::size_t j = 0; j < 2; ++j) {
        double ref = 0.0;
        for (std::size_t i1 = 0; i1 < 3; ++i1)
            for (std::size_t i2 = 0; i2 < 3; ++i2) ref += l.dense().at({j, i1, i2}) * a(i1) * b(i2);
        EXPECT_NEAR(layer_eval(l, basis, h)(j), ref, 1e-13);
    }
}

TEST(LayerEval, TtMatchesDense) {
    std::mt19937_64 rng(3);
    for (auto basis : {FeatureBasis::affine(), FeatureBasis::quadratic(), FeatureBasis::relu_abs()}) {
        CTTLayer d(random_layer(4, basis.size(), 1.0, rng));
        CTTLayer t(d.to_tt());
        CTTLayer t_trunc(d.to_tt(TruncationPolicy::uniform_rank(2)));
        CTTLayer back(t_trunc.to_dense());
        for (int s = 0; s < 20; ++s) {
            Vector h = random_vector(4, rng);
            Vector ref = layer_eval(d, basis, h);
            EXPECT_LT((layer_eval(t, basis, h) - ref).norm(), 1e-11 * std::max(1.0, ref.norm()));
            Matrix jref = layer_jacobian(d, basis, h);
            EXPECT_LT((layer_jacobian(t, basis, h) - jref).norm(), 1e-11 * std::max(1.0, jref.norm()));
            EXPECT_LT((layer_eval(back, basis, h) - layer_eval(t_trunc, basis, h)).norm(), 1e-11);
        }
    }
}

TEST(LayerJacobian, FiniteDifferences) {
    std::mt19937_64 rng(4);
    const double eps = 1e-6;
    for (auto basis : {FeatureBasis::affine(), FeatureBasis::quadratic(), FeatureBasis::relu_abs()}) {
        CTTLayer l(random_layer(3, basis.size(), 1.0, rng));
        for (int s = 0; s < 10; ++s) {
            Vector h = random_vector(3, rng);
            if (h.cwiseAbs().minCoeff() < 1e-4) continue;
            Matrix j = layer_jacobian(l, basis, h);
            for (Eigen::Index k = 0; k < 3; ++k) {
                Vector e = Vector::Zero(3);
                e(k) = eps;
                Vector fd = (layer_eval(l, basis, h + e) - layer_eval(l, basis, h - e)) / (2 * eps);
                EXPECT_LT((j.col(k) - fd).norm(), 1e-5 * std::max(1.0, fd.norm())) << basis.name();
            }
        }
    }
}

TEST(Forward, NoLayersFirstSlotZero) {
    CTTModel m(FeatureBasis::affine(), Lift::first_slot_zero(2), {}, Retraction::select({0}, 3));
    Vector x(2);
    x << 5.0, -3.0;
    auto t = forward(m, x);
    EXPECT_EQ(t.output(0), 0.0);
    ASSERT_EQ(t.states.size(), 1u);
}

TEST(Forward, RecursionAndFormatEquivalence) {
    std::mt19937_64 rng(5);
    auto m = random_model(3, 3, FeatureBasis::quadratic(), rng);
    std::vector<CTTLayer> tt_layers;
    for (const auto& l : m.layers()) tt_layers.emplace_back(l.to_tt());
    CTTModel mt(m.basis(), m.lift(), tt_layers, m.retraction());
    for (int s = 0; s < 100; ++s) {
        Vector x = random_vector(3, rng);
        auto t = forward(m, x);
        for (std::size_t k = 0; k < m.depth(); ++k) {
            Vector next = t.states[k] + layer_eval(m.layer(k), m.basis(), t.states[k]);
            EXPECT_LT((next - t.states[k + 1]).norm(), 1e-12 * std::max(1.0, next.norm()));
        }
        EXPECT_NEAR(forward(mt, x).output(0), t.output(0), 1e-10 * std::max(1.0, std::abs(t.output(0))));
        EXPECT_NEAR(densified(mt)(x)(0), t.output(0), 1e-10 * std::max(1.0, std::abs(t.output(0))));
    }
}

TEST(StateJacobian, TrivialCases) {
    std::mt19937_64 rng(6);
    auto m = random_model(3, 2, FeatureBasis::affine(), rng);
    auto t = forward(m, random_vector(3, rng));
    EXPECT_EQ(state_to_output_jacobian(m, t, 2), m.retraction().matrix());
    CTTModel z(FeatureBasis::affine(), Lift::identity(3), {zero_layer(3, 2)}, Retraction::first_slots(1, 3));
    auto tz = forward(z, random_vector(3, rng));
    EXPECT_EQ(state_to_output_jacobian(z, tz, 0), z.retraction().matrix());
}

TEST(StateJacobian, FiniteDifferences) {
    std::mt19937_64 rng(7);
    auto m = random_model(3, 2, FeatureBasis::quadratic(), rng, 0.5);
    const double eps = 1e-6;
    for (int s = 0; s < 5; ++s) {
        auto t = forward(m, random_vector(3, rng));
        for (std::size_t l = 0; l <= 2; ++l) {
            Matrix j = state_to_output_jacobian(m, t, l);
            for (Eigen::Index k = 0; k < 3; ++k) {
                auto run_from = [&](Vector u) {
                    for (std::size_t q = l; q < 2; ++q) u += layer_eval(m.layer(q), m.basis(), u);
                    return m.retraction().apply(u);
                };
                Vector e = Vector::Zero(3);
                e(k) = eps;
                Vector fd = (run_from(t.states[l] + e) - run_from(t.states[l] - e)) / (2 * eps);
                EXPECT_LT((j.col(k) - fd).norm(), 1e-5 * std::max(1.0, fd.norm()));
            }
        }
    }
}

TEST(ParameterJacobian, MatchesCoefficientPerturbation) {
    std::mt19937_64 rng(8);
    auto m = random_model(3, 2, FeatureBasis::affine(), rng, 0.4);
    Vector x = random_vector(3, rng);
    auto t = forward(m, x);
    const double eps = 1e-5;
    for (std::size_t l = 1; l <= 2; ++l) {
        Matrix j = parameter_jacobian(m, t, l);
        auto dir = random_layer(3, 2, 1.0, rng);
        Vector flat = Eigen::Map<const Vector>(dir.data(), static_cast<Eigen::Index>(dir.size()));
        auto plus = m, minus = m;
        for (std::size_t i = 0; i < dir.size(); ++i) {
            plus.layer(l - 1).dense().values()[i] += eps * dir.values()[i];
            minus.layer(l - 1).dense().values()[i] -= eps * dir.values()[i];
        }
        const double fd = (plus(x)(0) - minus(x)(0)) / (2 * eps);
        const double an = (j * flat)(0);
        EXPECT_NEAR(an, fd, 1e-4 * std::max(1.0, std::abs(fd)));
    }
}

TEST(Loss, TrivialAndBruteForce) {
    std::mt19937_64 rng(9);
    CTTModel zero(FeatureBasis::affine(), Lift::first_slot_zero(1), {}, Retraction::select({0}, 2));
    Dataset d{Matrix::Random(4, 1), Matrix::Ones(4, 1)};
    EXPECT_DOUBLE_EQ(loss_and_residual(zero, d).loss, 0.5);
    EXPECT_THROW((void)loss_and_residual(zero, Dataset{Matrix(0, 1), Matrix(0, 1)}), std::invalid_argument);

    auto m = random_model(2, 2, FeatureBasis::quadratic(), rng);
    Dataset data{Matrix::Random(16, 2), Matrix::Random(16, 1)};
    double acc = 0.0;
    for (int i = 0; i < 16; ++i) {
        const double r = m(data.x.row(i).transpose())(0) - data.y(i, 0);
        acc += r * r;
    }
    auto lr = loss_and_residual(m, data);
    EXPECT_NEAR(lr.loss, 0.5 * acc / 16, 1e-12 * acc);
    Dataset exact{data.x, Matrix(16, 1)};
    for (int i = 0; i < 16; ++i) exact.y(i, 0) = m(data.x.row(i).transpose())(0);
    EXPECT_EQ(loss_and_residual(m, exact).loss, 0.0);
    EXPECT_EQ(relative_error(m, exact), 0.0);
}

TEST(ModelIo, RoundTripDenseAndTt) {
    std::mt19937_64 rng(10);
    auto m = random_model(3, 2, FeatureBasis::relu_abs(), rng);
    m.layers()[1] = CTTLayer(m.layer(1).to_tt(TruncationPolicy::uniform_rank(2)));
    std::stringstream ss;
    write_model(ss, m);
    auto r = read_model(ss);
    EXPECT_EQ(r.basis(), m.basis());
    EXPECT_EQ(r.depth(), 2u);
    EXPECT_FALSE(r.layer(0).is_tt());
    EXPECT_TRUE(r.layer(1).is_tt());
    EXPECT_EQ(r.layer(0).dense().values(), m.layer(0).dense().values());
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(r.layer(1).tt().core(j).values(), m.layer(1).tt().core(j).values());
    Vector x = random_vector(3, rng);
    EXPECT_EQ(r(x), m(x));
}
