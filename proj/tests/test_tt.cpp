#include "ctt/tt.hpp"
#include "ctt/tt_io.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace ctt;

namespace {

DenseTensor random_tensor(const Shape& s, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    std::vector<double> v(shape_size(s));
    for (auto& e : v) e = nd(rng);
    return DenseTensor(s, std::move(v));
}

TTTensor random_tt(std::size_t r0, const Shape& modes, const std::vector<std::size_t>& ranks, std::mt19937_64& rng) {
    std::vector<DenseTensor> cores;
    for (std::size_t j = 0; j < modes.size(); ++j) {
        const std::size_t left = j == 0 ? r0 : ranks[j - 1];
        const std::size_t right = j + 1 == modes.size() ? 1 : ranks[j];
        cores.push_back(random_tensor({left, modes[j], right}, rng));
    }
    return TTTensor(std::move(cores));
}

double rel_diff(const DenseTensor& a, const DenseTensor& b) {
    DenseTensor d = a;
    DenseTensor nb = b;
    nb *= -1.0;
    d += nb;
    return d.norm() / std::max(a.norm(), 1e-300);
}

// Coefficients of 0.5 x^T G x over {1, x, x^2}^d.
DenseTensor quadratic_form_tensor(const Matrix& g) {
    const auto d = static_cast<std::size_t>(g.rows());
    DenseTensor t(Shape(d, 3));
    std::vector<std::size_t> idx(d, 0);
    for (std::size_t i = 0; i < d; ++i) {
        idx.assign(d, 0);
        idx[i] = 2;
        t(idx) += 0.5 * g(i, i);
        for (std::size_t j = i + 1; j < d; ++j) {
            idx.assign(d, 0);
            idx[i] = 1;
            idx[j] = 1;
            t(idx) += g(i, j);
        }
    }
    return t;
}

}  // namespace

TEST(TtSvd, RankOneTensor) {
    std::mt19937_64 rng(1);
    CPTensor c;
    for (std::size_t n : {2, 3, 4}) c.factors.push_back(random_tensor({n, 1}, rng).as_matrix(1));
    auto t = tt_svd(cp_reconstruct(c), TruncationPolicy::exact());
    for (auto r : t.internal_ranks()) EXPECT_EQ(r, 1u);
}

TEST(TtSvd, ToleranceContract) {
    std::mt19937_64 rng(2);
    auto t = random_tensor({3, 3, 3, 3}, rng);
    auto a = tt_svd(t, TruncationPolicy::relative(1e-8));
    EXPECT_LE(rel_diff(t, reconstruct(a)), 1e-8);
    for (double eps : {0.3, 0.1, 0.01}) {
        auto b = tt_svd(t, TruncationPolicy::relative(eps));
        EXPECT_LE(rel_diff(t, reconstruct(b)), eps);
    }
}

TEST(TtSvd, RankPolicyAndLeftOrthogonality) {
    std::mt19937_64 rng(3);
    auto t = random_tensor({4, 4, 4, 4}, rng);
    auto a = tt_svd(t, TruncationPolicy::max_ranks({2, 3, 2}));
    EXPECT_EQ(a.internal_ranks(), (std::vector<std::size_t>{2, 3, 2}));
    for (std::size_t j = 0; j + 1 < a.order(); ++j) {
        auto u = a.core(j).as_matrix(2);
        Matrix g = u.transpose() * u;
        EXPECT_LT((g - Matrix::Identity(g.rows(), g.cols())).norm(), 1e-12);
    }
}

TEST(TtSvd, ExactRanksEqualUnfoldingRanks) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        auto a = random_tt(1, {3, 4, 3, 2}, {2, 3, 2}, rng);
        auto t = reconstruct(a);
        auto b = tt_svd(t, TruncationPolicy::exact());
        EXPECT_EQ(b.internal_ranks(), unfolding_ranks(t));
        EXPECT_LE(rel_diff(t, reconstruct(b)), 1e-12);
    }
}

TEST(TtSvd, QuadraticFormRanks) {
    // Splitting after k variables needs span{1, q_left, q_right, x_i (i <= k)}
    // restricted to the smaller side: rank min(k, d-k) + 2.
    std::mt19937_64 rng(5);
    const std::size_t d = 6;
    Matrix a = random_tensor({d, d}, rng).as_matrix(1);
    Matrix g = a * a.transpose() + Matrix::Identity(d, d);
    auto t = tt_svd(quadratic_form_tensor(g), TruncationPolicy::exact());
    auto r = t.internal_ranks();
    for (std::size_t k = 1; k < d; ++k) EXPECT_EQ(r[k - 1], 2 + std::min(k, d - k));
    EXPECT_LE(rel_diff(quadratic_form_tensor(g), reconstruct(t)), 1e-12);
}

TEST(TtRound, NoOpAtOwnRanks) {
    std::mt19937_64 rng(6);
    auto a = random_tt(1, {3, 3, 3, 3}, {2, 3, 2}, rng);
    auto b = tt_round(a, TruncationPolicy::max_ranks(a.internal_ranks()));
    EXPECT_LE(rel_diff(reconstruct(a), reconstruct(b)), 1e-12);
    auto c = tt_round(a, TruncationPolicy::exact());
    EXPECT_LE(rel_diff(reconstruct(a), reconstruct(c)), 1e-12);
    EXPECT_EQ(c.internal_ranks(), a.internal_ranks());
}

TEST(TtRound, SumOfSelfRoundsToDouble) {
    std::mt19937_64 rng(7);
    auto a = random_tt(1, {2, 3, 4, 3}, {2, 2, 2}, rng);
    auto s = tt_add_scale(a, a, 1.0, 1.0);
    auto r = tt_round(s, TruncationPolicy::max_ranks(a.internal_ranks()));
    auto twice = reconstruct(a);
    twice *= 2.0;
    EXPECT_LE(rel_diff(twice, reconstruct(r)), 1e-10);
    EXPECT_EQ(r.internal_ranks(), a.internal_ranks());
}

TEST(TtRound, RecoveryTargetRanks) {
    // (x1 - x3)^2 (x2 - x4)^2 over {1, x, x^2}^4.
    DenseTensor t(Shape(4, 3));
    const double f[3] = {1.0, -2.0, 1.0};  // (a - b)^2 = a^2 - 2ab + b^2 as (i_a, i_b) pairs
    const std::size_t ia[3] = {2, 1, 0}, ib[3] = {0, 1, 2};
    for (int s = 0; s < 3; ++s)
        for (int u = 0; u < 3; ++u) t.at({ia[s], ia[u], ib[s], ib[u]}) += f[s] * f[u];
    auto full = tt_svd(t, TruncationPolicy::exact());
    EXPECT_EQ(full.internal_ranks(), (std::vector<std::size_t>{3, 9, 3}));
    EXPECT_EQ(full.parameter_count(), 1 * 3 * 3 + 3 * 3 * 9 + 9 * 3 * 3 + 3 * 3 * 1u);
    auto r = tt_round(full, TruncationPolicy::max_ranks({3, 9, 3}));
    EXPECT_LE(rel_diff(t, reconstruct(r)), 1e-12);
}

TEST(CpToTt, RankOneAndRandom) {
    std::mt19937_64 rng(8);
    CPTensor c1;
    for (int k = 0; k < 3; ++k) c1.factors.push_back(random_tensor({3, 1}, rng).as_matrix(1));
    for (auto r : cp_to_tt(c1).internal_ranks()) EXPECT_EQ(r, 1u);

    CPTensor c;
    for (int k = 0; k < 4; ++k) c.factors.push_back(random_tensor({2, 3}, rng).as_matrix(1));
    c.weights = Vector::Random(3);
    auto t = cp_to_tt(c);
    for (auto r : t.internal_ranks()) EXPECT_LE(r, 3u);
    EXPECT_LE(rel_diff(cp_reconstruct(c), reconstruct(t)), 1e-13);
}

TEST(CpToTt, MsaRightHandSide) {
    // sum_j sum_n lambda_{j,n} e_n (x) Phi(x_j), B = 2 samples, d = 2, basis {1, x}.
    const double xs[2] = {0.3, -0.7};
    const double lam[2][2] = {{0.5, -1.0}, {2.0, 0.25}};
    CPTensor c;
    c.factors.assign(2, Matrix::Zero(2, 4));
    DenseTensor dense(Shape{2, 2});
    for (int j = 0; j < 2; ++j)
        for (int n = 0; n < 2; ++n) {
            const int t = 2 * j + n;
            c.factors[0](n, t) = lam[j][n];
            c.factors[1](0, t) = 1.0;
            c.factors[1](1, t) = xs[j];
            dense.at({static_cast<std::size_t>(n), 0}) += lam[j][n];
            dense.at({static_cast<std::size_t>(n), 1}) += lam[j][n] * xs[j];
        }
    EXPECT_LE(c.rank(), 4u);
    auto t = cp_to_tt(c);
    EXPECT_LE(t.max_rank(), 4u);
    EXPECT_LE(rel_diff(dense, reconstruct(t)), 1e-13);
    EXPECT_LE(rel_diff(dense, cp_reconstruct(c)), 1e-14);
}

TEST(CpToTt, RoundingAtExactRankKeepsAccuracy) {
    std::mt19937_64 rng(9);
    CPTensor c;
    for (int k = 0; k < 4; ++k) c.factors.push_back(random_tensor({3, 2}, rng).as_matrix(1));
    auto t = cp_to_tt(c);
    auto r = tt_round(t, TruncationPolicy::max_ranks(tt_svd(cp_reconstruct(c), TruncationPolicy::exact()).internal_ranks()));
    EXPECT_LE(rel_diff(cp_reconstruct(c), reconstruct(r)), 1e-12);
}

TEST(TtEntry, OnesAndDenseMatch) {
    std::vector<DenseTensor> ones;
    for (int k = 0; k < 3; ++k) ones.emplace_back(Shape{1, 2, 1}, std::vector<double>{1.0, 1.0});
    TTTensor o(ones);
    for (std::size_t i = 0; i < 8; ++i) {
        std::vector<std::size_t> idx{i >> 2, (i >> 1) & 1, i & 1};
        EXPECT_EQ(tt_entry(o, idx), 1.0);
    }
    std::mt19937_64 rng(10);
    auto a = random_tt(1, {3, 4, 2, 3}, {2, 3, 2}, rng);
    auto dense = reconstruct(a);
    std::uniform_int_distribution<std::size_t> u(0, 100);
    for (int s = 0; s < 100; ++s) {
        std::vector<std::size_t> idx{u(rng) % 3, u(rng) % 4, u(rng) % 2, u(rng) % 3};
        EXPECT_NEAR(tt_entry(a, idx), dense(idx), 1e-13 * std::max(1.0, std::abs(dense(idx))));
    }
    std::vector<std::size_t> bad{3, 0, 0, 0};
    EXPECT_THROW((void)tt_entry(a, bad), std::invalid_argument);
}

TEST(TtEntry, PaddedFirstComponentReadsZero) {
    std::mt19937_64 rng(11);
    auto v1 = random_tt(1, {2, 3, 2}, {2, 2}, rng);
    auto cores = v1.cores();
    DenseTensor padded(Shape{3, 2, cores[0].dim(2)});
    for (std::size_t i = 0; i < cores[0].size(); ++i) padded.values()[i] = cores[0].values()[i];
    cores[0] = padded;
    TTTensor v(cores);
    EXPECT_EQ(v.internal_ranks(), v1.internal_ranks());
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 3; ++b)
            for (std::size_t c = 0; c < 2; ++c) {
                std::vector<std::size_t> idx{a, b, c};
                EXPECT_EQ(tt_entry(v, idx, 0), tt_entry(v1, idx));
                EXPECT_EQ(tt_entry(v, idx, 1), 0.0);
                EXPECT_EQ(tt_entry(v, idx, 2), 0.0);
            }
}

TEST(TtSvd, VectorProductFunctionRanks) {
    // v(x) = (v1(x1) w(x2..x4), 0, 0, 0) with w of known TT ranks (2, 3).
    std::mt19937_64 rng(12);
    auto w = random_tt(1, {3, 3, 3}, {2, 3}, rng);
    Vector v1 = Vector::Random(3);
    auto wd = reconstruct(w);
    DenseTensor t(Shape{4, 3, 3, 3, 3});
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < wd.size(); ++j) t.values()[i * wd.size() + j] = v1(i) * wd.values()[j];
    auto a = tt_svd_vector(t, TruncationPolicy::exact());
    EXPECT_EQ(a.output_rank(), 4u);
    EXPECT_EQ(a.internal_ranks(), (std::vector<std::size_t>{1, 2, 3}));
    EXPECT_LE(rel_diff(t, reconstruct(a)), 1e-12);
}

TEST(TtAdd, IdentitiesAndRankBound) {
    std::mt19937_64 rng(13);
    auto a = random_tt(2, {3, 2, 3}, {2, 3}, rng);
    auto b = random_tt(2, {3, 2, 3}, {3, 1}, rng);
    EXPECT_LE(rel_diff(reconstruct(a), reconstruct(tt_add_scale(a, b, 1.0, 0.0))), 1e-15);
    EXPECT_LE(reconstruct(tt_add_scale(a, a, 1.0, -1.0)).norm(), 1e-12);
    auto s = tt_add_scale(a, b, 0.5, -2.0);
    auto ref = reconstruct(a);
    ref *= 0.5;
    auto rb = reconstruct(b);
    rb *= -2.0;
    ref += rb;
    EXPECT_LE(rel_diff(ref, reconstruct(s)), 1e-12);
    for (std::size_t k = 0; k < 2; ++k)
        EXPECT_LE(s.internal_ranks()[k], a.internal_ranks()[k] + b.internal_ranks()[k]);
    auto c = random_tt(2, {3, 3, 3}, {2, 2}, rng);
    EXPECT_THROW((void)tt_add_scale(a, c, 1.0, 1.0), std::invalid_argument);
}

TEST(TtDot, MatchesDenseAndOrthogonality) {
    std::mt19937_64 rng(14);
    auto a = random_tt(1, {3, 2, 4, 2}, {2, 3, 2}, rng);
    auto b = random_tt(1, {3, 2, 4, 2}, {3, 2, 2}, rng);
    const double ref = frobenius_inner(reconstruct(a), reconstruct(b));
    EXPECT_NEAR(tt_dot(a, b), ref, 1e-11 * std::abs(ref));
    EXPECT_GE(tt_dot(a, a), 0.0);
    EXPECT_NEAR(tt_norm(a), reconstruct(a).norm(), 1e-11 * reconstruct(a).norm());

    std::vector<DenseTensor> c1, c2;
    for (int k = 0; k < 3; ++k) {
        c1.emplace_back(Shape{1, 2, 1}, std::vector<double>{1.0, k == 1 ? 0.0 : 1.0});
        c2.emplace_back(Shape{1, 2, 1}, std::vector<double>{k == 1 ? 0.0 : 1.0, 1.0});
    }
    c1[1] = DenseTensor(Shape{1, 2, 1}, {1.0, 0.0});
    c2[1] = DenseTensor(Shape{1, 2, 1}, {0.0, 1.0});
    EXPECT_NEAR(tt_dot(TTTensor(c1), TTTensor(c2)), 0.0, 1e-13);
}

TEST(TtIo, BitExactRoundTrip) {
    std::mt19937_64 rng(15);
    auto a = random_tt(3, {2, 4, 3}, {2, 5}, rng);
    std::stringstream ss;
    write_tt(ss, a);
    auto b = read_tt(ss);
    ASSERT_EQ(b.ranks(), a.ranks());
    for (std::size_t j = 0; j < a.order(); ++j) EXPECT_EQ(a.core(j).values(), b.core(j).values());

    auto d = random_tensor({2, 3, 2}, rng);
    std::stringstream ds;
    write_dense(ds, d);
    EXPECT_EQ(read_dense(ds).values(), d.values());

    std::string bytes = ss.str();
    bytes[0] = 'X';
    std::stringstream bad(bytes);
    EXPECT_THROW((void)read_tt(bad), std::runtime_error);
    std::stringstream truncated(ss.str().substr(0, 40));
    EXPECT_THROW((void)read_tt(truncated), std::runtime_error);
}

TEST(TtApply, BilinearMatchesDense) {
    std::mt19937_64 rng(16);
    auto a = random_tt(1, {2, 3}, {2}, rng);
    auto b = random_tt(1, {2, 3}, {3}, rng);
    std::vector<Matrix> mats{Matrix::Random(2, 2), Matrix::Random(3, 3)};
    const auto da = reconstruct(a), db = reconstruct(b);
    double ref = 0.0;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t k = 0; k < 2; ++k)
                for (std::size_t l = 0; l < 3; ++l)
                    ref += da.at({i, j}) * mats[0](i, k) * mats[1](j, l) * db.at({k, l});
    EXPECT_NEAR(tt_bilinear(a, mats, b), ref, 1e-12 * std::max(1.0, std::abs(ref)));
}

TEST(TtExpand, OutputAsModeRoundTrip) {
    std::mt19937_64 rng(17);
    auto a = random_tt(3, {2, 2}, {2}, rng);
    auto e = tt_expand_output(a);
    EXPECT_EQ(e.output_rank(), 1u);
    EXPECT_EQ(e.order(), 3u);
    auto back = tt_absorb_output(e);
    EXPECT_LE(rel_diff(reconstruct(a), reconstruct(back)), 1e-15);
    EXPECT_LE(rel_diff(reconstruct(a), reconstruct(e)), 1e-15);
}
