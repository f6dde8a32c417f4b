#include "ctt/als.hpp"

#include "ctt/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace ctt {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j) k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return k;
}

// Mode-k product y(l, i, r) = sum_j m(i, j) x(l, j, r).
DenseTensor mode_product(const DenseTensor& x, std::size_t k, const Matrix& m) {
    const auto& s = x.shape();
    std::size_t left = 1, right = 1;
    for (std::size_t j = 0; j < k; ++j) left *= s[j];
    for (std::size_t j = k + 1; j < s.size(); ++j) right *= s[j];
    const std::size_t n = s[k];
    DenseTensor y(s);
    for (std::size_t l = 0; l < left; ++l) {
        Eigen::Map<const RowMatrix> xs(x.data() + l * n * right, idx(n), idx(right));
        Eigen::Map<RowMatrix> ys(y.data() + l * n * right, idx(n), idx(right));
        ys.noalias() = m * xs;
    }
    return y;
}

// L'(a', b') = sum L(a, b) x(a, i, a') M(i, j) y(b, j, b'); M = nullptr means identity.
Matrix left_next(const Matrix& l, const DenseTensor& x, const Matrix* m, const DenseTensor& y) {
    const std::size_t n = x.dim(1), ra2 = x.dim(2), rb = y.dim(0);
    RowMatrix v = l.transpose() * x.as_matrix(1);
    if (m) {
        for (std::size_t b = 0; b < rb; ++b) {
            Eigen::Map<RowMatrix> vb(v.data() + b * n * ra2, idx(n), idx(ra2));
            RowMatrix w = m->transpose() * vb;
            vb = w;
        }
    }
    Eigen::Map<const RowMatrix> vv(v.data(), idx(rb * n), idx(ra2));
    return vv.transpose() * y.as_matrix(2);
}

// R'(a, b) = sum x(a, i, a') M(i, j) y(b, j, b') R(a', b').
Matrix right_next(const Matrix& r, const DenseTensor& x, const Matrix* m, const DenseTensor& y) {
    const std::size_t n = x.dim(1), ra2 = x.dim(2), rb = y.dim(0);
    RowMatrix q = y.as_matrix(2) * r.transpose();
    if (m) {
        for (std::size_t b = 0; b < rb; ++b) {
            Eigen::Map<RowMatrix> qb(q.data() + b * n * ra2, idx(n), idx(ra2));
            RowMatrix w = (*m) * qb;
            qb = w;
        }
    }
    Eigen::Map<const RowMatrix> qq(q.data(), idx(rb), idx(n * ra2));
    return x.as_matrix(1) * qq.transpose();
}

Matrix thin_q(const Matrix& m) {
    Eigen::HouseholderQR<Matrix> qr(m);
    return qr.householderQ() * Matrix::Identity(m.rows(), std::min(m.rows(), m.cols()));
}

// Moves the non-orthogonal part of core k into core k + 1.
void shift_right(std::vector<DenseTensor>& cores, std::size_t k) {
    const std::size_t r0 = cores[k].dim(0), n = cores[k].dim(1), r1 = cores[k].dim(2);
    Matrix m = cores[k].as_matrix(2);
    Matrix q = thin_q(m);
    Matrix rr = q.transpose() * m;
    DenseTensor c({r0, n, static_cast<std::size_t>(q.cols())});
    c.as_matrix(2) = q;
    cores[k] = std::move(c);
    auto& nx = cores[k + 1];
    DenseTensor d({static_cast<std::size_t>(q.cols()), nx.dim(1), nx.dim(2)});
    d.as_matrix(1) = rr * nx.as_matrix(1);
    nx = std::move(d);
    (void)r1;
}

// Moves the non-orthogonal part of core k into core k - 1.
void shift_left(std::vector<DenseTensor>& cores, std::size_t k) {
    const std::size_t n = cores[k].dim(1), r1 = cores[k].dim(2);
    Matrix mt = cores[k].as_matrix(1).transpose();
    Matrix q = thin_q(mt);
    Matrix rr = q.transpose() * mt;
    DenseTensor c({static_cast<std::size_t>(q.cols()), n, r1});
    c.as_matrix(1) = q.transpose();
    cores[k] = std::move(c);
    auto& pv = cores[k - 1];
    DenseTensor d({pv.dim(0), pv.dim(1), static_cast<std::size_t>(q.cols())});
    d.as_matrix(2) = pv.as_matrix(2) * rr.transpose();
    pv = std::move(d);
}

struct SpdSolve {
    Vector x;
    bool regularized = false;
};

SpdSolve solve_spd(Matrix a, const Vector& b, double ridge) {
    Eigen::LDLT<Matrix> ldlt(a);
    const double scale = std::max(1e-300, a.diagonal().cwiseAbs().maxCoeff());
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.rcond() > 1e-14) return {ldlt.solve(b), false};
    a.diagonal().array() += ridge * scale;
    ldlt.compute(a);
    return {ldlt.solve(b), true};
}

}  // namespace

Shape CPOperator::mode_sizes() const {
    Shape s;
    for (const auto& c : terms.front()) s.push_back(static_cast<std::size_t>(c.rows()));
    return s;
}

void CPOperator::validate() const {
    require(!terms.empty(), "operator needs at least one term");
    const Shape s = mode_sizes();
    for (const auto& t : terms) {
        require(t.size() == s.size(), "all operator terms need the same order");
        for (std::size_t k = 0; k < s.size(); ++k)
            require(static_cast<std::size_t>(t[k].rows()) == s[k] && static_cast<std::size_t>(t[k].cols()) == s[k],
                    "operator factors must be square with consistent sizes");
    }
}

Matrix CPOperator::dense() const {
    validate();
    const std::size_t n = shape_size(mode_sizes());
    Matrix a = Matrix::Zero(idx(n), idx(n));
    for (const auto& t : terms) {
        Matrix k = t[0];
        for (std::size_t j = 1; j < t.size(); ++j) k = kron(k, t[j]);
        a += k;
    }
    return a;
}

DenseTensor CPOperator::apply(const DenseTensor& x) const {
    validate();
    require(x.shape() == mode_sizes(), "operator and tensor shapes differ");
    DenseTensor y(x.shape());
    for (const auto& t : terms) {
        DenseTensor z = x;
        for (std::size_t k = 0; k < t.size(); ++k) z = mode_product(z, k, t[k]);
        y += z;
    }
    return y;
}

CPOperator CPOperator::transposed() const {
    CPOperator t{terms, symmetric};
    for (auto& term : t.terms)
        for (auto& c : term) c.transposeInPlace();
    return t;
}

CPOperator CPOperator::normal() const {
    CPOperator n;
    n.symmetric = true;
    for (const auto& a : terms)
        for (const auto& b : terms) {
            std::vector<Matrix> term;
            for (std::size_t k = 0; k < a.size(); ++k) term.push_back(a[k].transpose() * b[k]);
            n.terms.push_back(std::move(term));
        }
    return n;
}

std::vector<std::size_t> feasible_ranks(const Shape& modes, const std::vector<std::size_t>& ranks) {
    const std::size_t d = modes.size();
    if (d < 2) return {};
    require(!ranks.empty(), "ranks must be given");
    std::vector<std::size_t> r(d + 1, 1);
    for (std::size_t k = 1; k < d; ++k) {
        r[k] = ranks.size() == 1 ? ranks[0] : ranks.at(k - 1);
        require(r[k] >= 1, "ranks must be positive");
    }
    for (std::size_t k = 1; k < d; ++k) r[k] = std::min(r[k], r[k - 1] * modes[k - 1]);
    for (std::size_t k = d - 1; k >= 1; --k) r[k] = std::min(r[k], r[k + 1] * modes[k]);
    return {r.begin() + 1, r.end() - 1};
}

TTTensor random_tt(const Shape& modes, const std::vector<std::size_t>& ranks, std::uint64_t seed) {
    const auto r = feasible_ranks(modes, ranks.empty() ? std::vector<std::size_t>{1} : ranks);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::vector<DenseTensor> cores;
    for (std::size_t k = 0; k < modes.size(); ++k) {
        const std::size_t a = k == 0 ? 1 : r[k - 1], b = k + 1 == modes.size() ? 1 : r[k];
        DenseTensor c({a, modes[k], b});
        for (auto& v : c.values()) v = nd(rng);
        cores.push_back(std::move(c));
    }
    return TTTensor(std::move(cores));
}

double als_residual(const CPOperator& a, const TTTensor& x, const TTTensor& rhs) {
    const double nb = tt_norm(rhs);
    const std::size_t n = shape_size(a.mode_sizes());
    if (n <= (std::size_t{1} << 20)) {
        DenseTensor r = a.apply(reconstruct(x));
        DenseTensor b = reconstruct(rhs);
        b *= -1.0;
        r += b;
        return nb > 0 ? r.norm() / nb : r.norm();
    }
    double s = nb * nb;
    for (const auto& t : a.terms) {
        s -= 2.0 * tt_bilinear(rhs, t, x);
        for (const auto& u : a.terms) {
            std::vector<Matrix> m;
            for (std::size_t k = 0; k < t.size(); ++k) m.push_back(t[k].transpose() * u[k]);
            s += tt_bilinear(x, m, x);
        }
    }
    const double r = std::sqrt(std::max(0.0, s));
    return nb > 0 ? r / nb : r;
}

TTTensor als_solve(const CPOperator& a_in, const TTTensor& rhs_in, const ALSOptions& opt, ALSReport* report) {
    a_in.validate();
    require(rhs_in.output_rank() == 1, "ALS right-hand side must be a scalar TT");
    require(rhs_in.mode_sizes() == a_in.mode_sizes(), "operator and right-hand side shapes differ");
    CPOperator a = a_in;
    TTTensor rhs = rhs_in;
    if (!a_in.symmetric) {
        a = a_in.normal();
        const CPOperator at = a_in.transposed();
        rhs = tt_zeros(1, rhs_in.mode_sizes());
        for (const auto& t : at.terms) rhs = tt_add_scale(rhs, tt_apply_modes(rhs_in, t), 1.0, 1.0);
        rhs = tt_round(rhs, TruncationPolicy::exact());
    }
    const Shape modes = a.mode_sizes();
    const std::size_t d = modes.size();
    const std::size_t nt = a.terms.size();
    ALSReport rep;
    const double ridge = 1e-12;

    TTTensor x = right_orthogonalize(random_tt(modes, opt.ranks.empty() ? std::vector<std::size_t>{1} : opt.ranks,
                                               opt.seed));
    auto& xc = x.cores();
    const auto& bc = rhs.cores();
    const Matrix one = Matrix::Ones(1, 1);
    std::vector<std::vector<Matrix>> left(nt, std::vector<Matrix>(d + 1)), right(nt, std::vector<Matrix>(d + 1));
    std::vector<Matrix> lb(d + 1), rb(d + 1);
    for (std::size_t t = 0; t < nt; ++t) left[t][0] = right[t][d] = one;
    lb[0] = rb[d] = one;
    auto update_right = [&](std::size_t k) {
        for (std::size_t t = 0; t < nt; ++t) right[t][k] = right_next(right[t][k + 1], xc[k], &a.terms[t][k], xc[k]);
        rb[k] = right_next(rb[k + 1], xc[k], nullptr, bc[k]);
    };
    auto update_left = [&](std::size_t k) {
        for (std::size_t t = 0; t < nt; ++t) left[t][k + 1] = left_next(left[t][k], xc[k], &a.terms[t][k], xc[k]);
        lb[k + 1] = left_next(lb[k], xc[k], nullptr, bc[k]);
    };
    for (std::size_t k = d; k-- > 1;) update_right(k);

    auto solve_core = [&](std::size_t k) {
        const std::size_t r0 = xc[k].dim(0), n = xc[k].dim(1), r1 = xc[k].dim(2);
        const std::size_t m = r0 * n * r1;
        Matrix loc = Matrix::Zero(idx(m), idx(m));
        for (std::size_t t = 0; t < nt; ++t) loc += kron(left[t][k], kron(a.terms[t][k], right[t][k + 1]));
        RowMatrix tmp = lb[k] * bc[k].as_matrix(1);
        Eigen::Map<const RowMatrix> tv(tmp.data(), idx(r0 * n), idx(bc[k].dim(2)));
        RowMatrix bl = tv * rb[k + 1].transpose();
        Eigen::Map<const Vector> bv(bl.data(), idx(m));
        auto s = solve_spd(loc, bv, ridge);
        rep.regularized = rep.regularized || s.regularized;
        std::copy(s.x.data(), s.x.data() + m, xc[k].data());
        rep.energies.push_back(0.5 * s.x.dot(loc * s.x) - bv.dot(s.x));
    };

    rep.residuals.push_back(als_residual(a_in, x, rhs_in));
    for (std::size_t sweep = 0; sweep < opt.sweeps; ++sweep) {
        if (d == 1) {
            solve_core(0);
        } else {
            for (std::size_t k = 0; k + 1 < d; ++k) {
                solve_core(k);
                shift_right(xc, k);
                update_left(k);
            }
            for (std::size_t k = d - 1; k >= 1; --k) {
                solve_core(k);
                shift_left(xc, k);
                update_right(k);
            }
        }
        rep.sweeps = sweep + 1;
        const double res = als_residual(a_in, x, rhs_in);
        const double prev = rep.residuals.back();
        rep.residuals.push_back(res);
        if (res == 0.0 || std::abs(prev - res) <= opt.rtol * std::max(prev, 1e-300)) break;
    }
    if (report) *report = std::move(rep);
    return x;
}

TTTensor als_solve(const CPOperator& a, const CPTensor& rhs, const ALSOptions& opt, ALSReport* report) {
    return als_solve(a, tt_round(cp_to_tt(rhs), TruncationPolicy::exact()), opt, report);
}

namespace {

std::vector<Matrix> feature_matrices(const FeatureBasis& basis, const Matrix& x) {
    std::vector<Matrix> phi;
    const std::size_t n = basis.size();
    for (Index k = 0; k < x.cols(); ++k) {
        Matrix f(x.rows(), idx(n));
        for (Index i = 0; i < x.rows(); ++i) f.row(i) = basis.eval(x(i, k)).transpose();
        phi.push_back(std::move(f));
    }
    return phi;
}

// Left partial contraction per sample: rows l_i (x) phi_i contracted with the core.
Matrix advance_left(const Matrix& l, const Matrix& phi, const DenseTensor& core) {
    const std::size_t r0 = core.dim(0), n = core.dim(1), r1 = core.dim(2);
    Matrix out = Matrix::Zero(l.rows(), idx(r1));
    Eigen::Map<const RowMatrix> c(core.data(), idx(r0 * n), idx(r1));
    for (Index i = 0; i < l.rows(); ++i) {
        Eigen::RowVectorXd z(idx(r0 * n));
        for (std::size_t a = 0; a < r0; ++a)
            for (std::size_t j = 0; j < n; ++j) z(idx(a * n + j)) = l(i, idx(a)) * phi(i, idx(j));
        out.row(i) = z * c;
    }
    return out;
}

Matrix advance_right(const Matrix& r, const Matrix& phi, const DenseTensor& core) {
    const std::size_t r0 = core.dim(0), n = core.dim(1), r1 = core.dim(2);
    Matrix out = Matrix::Zero(r.rows(), idx(r0));
    Eigen::Map<const RowMatrix> c(core.data(), idx(r0), idx(n * r1));
    for (Index i = 0; i < r.rows(); ++i) {
        Vector z(idx(n * r1));
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t b = 0; b < r1; ++b) z(idx(j * r1 + b)) = phi(i, idx(j)) * r(i, idx(b));
        out.row(i) = (c * z).transpose();
    }
    return out;
}

}  // namespace

Vector tt_function_batch(const TTTensor& coef, const FeatureBasis& basis, const Matrix& x) {
    require(coef.output_rank() == 1, "TT function needs a scalar train");
    require(static_cast<std::size_t>(x.cols()) == coef.order(), "sample dimension must equal the TT order");
    auto phi = feature_matrices(basis, x);
    Matrix l = Matrix::Ones(x.rows(), 1);
    for (std::size_t k = 0; k < coef.order(); ++k) l = advance_left(l, phi[k], coef.core(k));
    return l.col(0);
}

double tt_function(const TTTensor& coef, const FeatureBasis& basis, const Vector& x) {
    return tt_function_batch(coef, basis, x.transpose())(0);
}

double tt_function_error(const TTTensor& coef, const FeatureBasis& basis, const Matrix& x, const Vector& y) {
    const double ny = y.norm();
    const double e = (tt_function_batch(coef, basis, x) - y).norm();
    return ny > 0 ? e / ny : e;
}

TTTensor tt_regression(const Matrix& x, const Vector& y, const FeatureBasis& basis, const RegressionOptions& opt,
                       RegressionReport* report, const Matrix* x_val, const Vector* y_val) {
    require(x.rows() >= 1 && x.cols() >= 1, "regression needs at least one sample");
    require(y.size() == x.rows(), "one value per sample");
    const auto d = static_cast<std::size_t>(x.cols());
    const Shape modes(d, basis.size());
    RegressionReport rep;
    TTTensor c = right_orthogonalize(random_tt(modes, opt.ranks.empty() ? std::vector<std::size_t>{1} : opt.ranks,
                                               opt.seed));
    auto& cores = c.cores();
    auto phi = feature_matrices(basis, x);
    const Index b = x.rows();
    std::vector<Matrix> lv(d + 1), rv(d + 1);
    lv[0] = Matrix::Ones(b, 1);
    rv[d] = Matrix::Ones(b, 1);
    for (std::size_t k = d; k-- > 1;) rv[k] = advance_right(rv[k + 1], phi[k], cores[k]);

    auto solve_core = [&](std::size_t k) {
        const std::size_t r0 = cores[k].dim(0), n = cores[k].dim(1), r1 = cores[k].dim(2);
        const std::size_t m = r0 * n * r1;
        Matrix design(b, idx(m));
        for (Index i = 0; i < b; ++i)
            for (std::size_t a0 = 0; a0 < r0; ++a0)
                for (std::size_t j = 0; j < n; ++j) {
                    const double lp = lv[k](i, idx(a0)) * phi[k](i, idx(j));
                    for (std::size_t a1 = 0; a1 < r1; ++a1)
                        design(i, idx((a0 * n + j) * r1 + a1)) = lp * rv[k + 1](i, idx(a1));
                }
        Matrix g = Matrix::Zero(idx(m), idx(m));
        g.selfadjointView<Eigen::Lower>().rankUpdate(design.transpose());
        g = g.selfadjointView<Eigen::Lower>();
        auto s = solve_spd(g, design.transpose() * y, 1e-10);
        rep.regularized = rep.regularized || s.regularized;
        std::copy(s.x.data(), s.x.data() + m, cores[k].data());
    };

    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t sweep = 0; sweep < opt.sweeps; ++sweep) {
        if (d == 1) {
            solve_core(0);
        } else {
            for (std::size_t k = 0; k + 1 < d; ++k) {
                solve_core(k);
                shift_right(cores, k);
                lv[k + 1] = advance_left(lv[k], phi[k], cores[k]);
            }
            for (std::size_t k = d - 1; k >= 1; --k) {
                solve_core(k);
                shift_left(cores, k);
                rv[k] = advance_right(rv[k + 1], phi[k], cores[k]);
            }
        }
        rep.sweeps = sweep + 1;
        const double e = tt_function_error(c, basis, x, y);
        rep.train_history.push_back(e);
        if (std::abs(prev - e) <= opt.rtol * std::max(e, 1e-300) || e < 1e-14) break;
        prev = e;
    }
    rep.train_error = rep.train_history.empty() ? tt_function_error(c, basis, x, y) : rep.train_history.back();
    rep.parameters = c.parameter_count();
    if (x_val && y_val) rep.validation_error = tt_function_error(c, basis, *x_val, *y_val);
    if (report) *report = std::move(rep);
    return c;
}

}  // namespace ctt
