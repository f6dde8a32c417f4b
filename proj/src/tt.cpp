#include "ctt/tt.hpp"

#include "ctt/error.hpp"

#include <algorithm>
#include <cmath>

namespace ctt {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

// Slice U(:, i, :) of a core as an r_{k-1} x r_k matrix.
Matrix slice(const DenseTensor& core, std::size_t i) {
    const auto r0 = core.dim(0), n = core.dim(1), r1 = core.dim(2);
    Matrix s(idx(r0), idx(r1));
    for (std::size_t a = 0; a < r0; ++a)
        for (std::size_t b = 0; b < r1; ++b) s(idx(a), idx(b)) = core.data()[(a * n + i) * r1 + b];
    return s;
}

DenseTensor core_from_left(const Matrix& m, std::size_t r0, std::size_t n) {
    const auto r1 = static_cast<std::size_t>(m.cols());
    DenseTensor c({r0, n, r1});
    c.as_matrix(2) = m;
    return c;
}

DenseTensor core_from_right(const Matrix& m, std::size_t n, std::size_t r1) {
    const auto r0 = static_cast<std::size_t>(m.rows());
    DenseTensor c({r0, n, r1});
    c.as_matrix(1) = m;
    return c;
}

struct ThinQr {
    Matrix Q;
    Matrix R;
};

ThinQr thin_qr(const Matrix& m) {
    const Index k = std::min(m.rows(), m.cols());
    Eigen::HouseholderQR<Matrix> qr(m);
    ThinQr out;
    out.Q = qr.householderQ() * Matrix::Identity(m.rows(), k);
    out.R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    return out;
}

SvdPolicy step_policy(const TruncationPolicy& policy, std::size_t k, double delta) {
    if (policy.kind == TruncationPolicy::Kind::ranks) return SvdPolicy::max_rank(policy.rank_at(k));
    return SvdPolicy::absolute(delta);
}

}  // namespace

// ---------------------------------------------------------------------------
// TTTensor

TTTensor::TTTensor(std::vector<DenseTensor> cores) : cores_(std::move(cores)) { validate(); }

void TTTensor::validate() const {
    require(!cores_.empty(), "tensor train needs at least one core");
    for (std::size_t j = 0; j < cores_.size(); ++j) {
        require(cores_[j].order() == 3, "tensor train cores must have order 3");
        if (j + 1 < cores_.size())
            require(cores_[j].dim(2) == cores_[j + 1].dim(0), "tensor train ranks do not chain");
    }
    require(cores_.back().dim(2) == 1, "last tensor train rank must be 1");
}

Shape TTTensor::mode_sizes() const {
    Shape s;
    for (const auto& c : cores_) s.push_back(c.dim(1));
    return s;
}

std::vector<std::size_t> TTTensor::ranks() const {
    std::vector<std::size_t> r{cores_.front().dim(0)};
    for (const auto& c : cores_) r.push_back(c.dim(2));
    return r;
}

std::vector<std::size_t> TTTensor::internal_ranks() const {
    std::vector<std::size_t> r;
    for (std::size_t j = 0; j + 1 < cores_.size(); ++j) r.push_back(cores_[j].dim(2));
    return r;
}

std::size_t TTTensor::max_rank() const {
    auto r = internal_ranks();
    return r.empty() ? 1 : *std::max_element(r.begin(), r.end());
}

std::size_t TTTensor::parameter_count() const {
    std::size_t s = 0;
    for (const auto& c : cores_) s += c.size();
    return s;
}

std::size_t CPTensor::rank() const { return factors.empty() ? 0 : static_cast<std::size_t>(factors.front().cols()); }

void CPTensor::validate() const {
    require(!factors.empty(), "CP tensor needs at least one mode");
    const auto r = factors.front().cols();
    require(r >= 1, "CP rank must be at least 1");
    for (const auto& f : factors) require(f.cols() == r, "all CP modes must carry the same number of terms");
    require(weights.size() == 0 || weights.size() == r, "CP weight count mismatch");
}

std::size_t TruncationPolicy::rank_at(std::size_t k) const {
    require(!ranks.empty(), "rank policy without ranks");
    if (ranks.size() == 1) return ranks.front();
    require(k >= 1 && k <= ranks.size(), "rank policy is shorter than the tensor train");
    return ranks[k - 1];
}

// ---------------------------------------------------------------------------
// TT-SVD and rounding

TTTensor tt_svd_vector(const DenseTensor& t, const TruncationPolicy& policy) {
    require(t.order() >= 2, "tt_svd_vector needs an output mode and at least one tensor mode");
    const std::size_t d = t.order() - 1;
    const double delta = d > 1 ? policy.eps * t.norm() / std::sqrt(static_cast<double>(d - 1)) : 0.0;

    std::vector<DenseTensor> cores;
    std::size_t r_prev = t.dim(0);
    std::size_t rest = t.size() / r_prev;
    RowMatrix c = t.as_matrix(1);  // r_prev x rest
    for (std::size_t k = 1; k < d; ++k) {
        const std::size_t n = t.dim(k);
        rest /= n;
        Eigen::Map<const RowMatrix> w(c.data(), idx(r_prev * n), idx(rest));
        SvdResult svd = truncated_svd(Matrix(w), step_policy(policy, k, delta));
        cores.push_back(core_from_left(svd.U, r_prev, n));
        c = RowMatrix(svd.sigma.asDiagonal() * svd.V.transpose());
        r_prev = svd.rank();
    }
    Eigen::Map<const RowMatrix> last(c.data(), idx(r_prev * t.dim(d)), 1);
    cores.push_back(core_from_left(Matrix(last), r_prev, t.dim(d)));
    return TTTensor(std::move(cores));
}

TTTensor tt_svd(const DenseTensor& t, const TruncationPolicy& policy) {
    require(t.order() >= 1, "tt_svd needs a tensor of order at least 1");
    Shape s{1};
    s.insert(s.end(), t.shape().begin(), t.shape().end());
    return tt_svd_vector(t.reshaped(s), policy);
}

DenseTensor reconstruct(const TTTensor& a) {
    const auto& cores = a.cores();
    RowMatrix m = cores.front().as_matrix(2);  // (r0 n1) x r1
    for (std::size_t k = 1; k < cores.size(); ++k) {
        RowMatrix next = m * cores[k].as_matrix(1);  // rows x (n_k r_k)
        const auto rows = static_cast<Index>(next.size() / idx(cores[k].dim(2)));
        m = Eigen::Map<RowMatrix>(next.data(), rows, idx(cores[k].dim(2)));
    }
    Shape shape;
    if (a.output_rank() > 1) shape.push_back(a.output_rank());
    for (auto n : a.mode_sizes()) shape.push_back(n);
    return DenseTensor(shape, std::vector<double>(m.data(), m.data() + m.size()));
}

TTTensor right_orthogonalize(const TTTensor& a) {
    auto cores = a.cores();
    for (std::size_t k = cores.size(); k-- > 1;) {
        const std::size_t n = cores[k].dim(1), r1 = cores[k].dim(2);
        ThinQr qr = thin_qr(Matrix(cores[k].as_matrix(1)).transpose());
        cores[k] = core_from_right(qr.Q.transpose(), n, r1);
        const std::size_t r0 = cores[k - 1].dim(0), n0 = cores[k - 1].dim(1);
        cores[k - 1] = core_from_left(Matrix(cores[k - 1].as_matrix(2)) * qr.R.transpose(), r0, n0);
    }
    return TTTensor(std::move(cores));
}

TTTensor left_orthogonalize(const TTTensor& a) {
    auto cores = a.cores();
    for (std::size_t k = 0; k + 1 < cores.size(); ++k) {
        const std::size_t r0 = cores[k].dim(0), n = cores[k].dim(1);
        ThinQr qr = thin_qr(Matrix(cores[k].as_matrix(2)));
        cores[k] = core_from_left(qr.Q, r0, n);
        const std::size_t n1 = cores[k + 1].dim(1), r2 = cores[k + 1].dim(2);
        cores[k + 1] = core_from_right(qr.R * Matrix(cores[k + 1].as_matrix(1)), n1, r2);
    }
    return TTTensor(std::move(cores));
}

TTTensor tt_round(const TTTensor& a, const TruncationPolicy& policy) {
    TTTensor b = right_orthogonalize(a);
    auto& cores = b.cores();
    const std::size_t d = cores.size();
    if (d == 1) return b;
    const double delta = policy.eps * cores.front().norm() / std::sqrt(static_cast<double>(d - 1));
    for (std::size_t k = 0; k + 1 < d; ++k) {
        const std::size_t r0 = cores[k].dim(0), n = cores[k].dim(1);
        SvdResult svd = truncated_svd(Matrix(cores[k].as_matrix(2)), step_policy(policy, k + 1, delta));
        cores[k] = core_from_left(svd.U, r0, n);
        const std::size_t n1 = cores[k + 1].dim(1), r2 = cores[k + 1].dim(2);
        Matrix carry = svd.sigma.asDiagonal() * svd.V.transpose();
        cores[k + 1] = core_from_right(carry * Matrix(cores[k + 1].as_matrix(1)), n1, r2);
    }
    return b;
}

// ---------------------------------------------------------------------------
// CP interop

TTTensor cp_to_tt(const CPTensor& c) {
    c.validate();
    const std::size_t d = c.order(), r = c.rank();
    std::vector<DenseTensor> cores;
    if (d == 1) {
        const auto n = static_cast<std::size_t>(c.factors[0].rows());
        DenseTensor core({1, n, 1});
        for (std::size_t t = 0; t < r; ++t)
            for (std::size_t i = 0; i < n; ++i) core.data()[i] += c.weight(t) * c.factors[0](idx(i), idx(t));
        cores.push_back(std::move(core));
        return TTTensor(std::move(cores));
    }
    for (std::size_t k = 0; k < d; ++k) {
        const auto& f = c.factors[k];
        const auto n = static_cast<std::size_t>(f.rows());
        const std::size_t left = k == 0 ? 1 : r, right = k + 1 == d ? 1 : r;
        DenseTensor core({left, n, right});
        for (std::size_t t = 0; t < r; ++t) {
            const std::size_t a = k == 0 ? 0 : t, b = k + 1 == d ? 0 : t;
            const double w = k == 0 ? c.weight(t) : 1.0;
            for (std::size_t i = 0; i < n; ++i) core.data()[(a * n + i) * right + b] = w * f(idx(i), idx(t));
        }
        cores.push_back(std::move(core));
    }
    return TTTensor(std::move(cores));
}

DenseTensor cp_reconstruct(const CPTensor& c) {
    c.validate();
    Shape shape;
    for (const auto& f : c.factors) shape.push_back(static_cast<std::size_t>(f.rows()));
    DenseTensor out(shape);
    std::vector<double> term;
    for (std::size_t t = 0; t < c.rank(); ++t) {
        term.assign(1, c.weight(t));
        for (const auto& f : c.factors) {
            std::vector<double> next;
            next.reserve(term.size() * static_cast<std::size_t>(f.rows()));
            for (double v : term)
                for (Index i = 0; i < f.rows(); ++i) next.push_back(v * f(i, idx(t)));
            term.swap(next);
        }
        for (std::size_t i = 0; i < term.size(); ++i) out.data()[i] += term[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation and arithmetic

double tt_entry(const TTTensor& a, std::span<const std::size_t> index, std::size_t slot) {
    require(index.size() == a.order(), "tt_entry: index order mismatch");
    if (slot >= a.output_rank()) argument_error("tt_entry: output slot out of range");
    for (std::size_t k = 0; k < a.order(); ++k)
        if (index[k] >= a.core(k).dim(1)) argument_error("tt_entry: index out of range");
    Matrix row = slice(a.core(0), index[0]).row(idx(slot));
    for (std::size_t k = 1; k < a.order(); ++k) row = row * slice(a.core(k), index[k]);
    return row(0, 0);
}

TTTensor tt_add_scale(const TTTensor& a, const TTTensor& b, double alpha, double beta) {
    require(a.mode_sizes() == b.mode_sizes(), "tt_add_scale: shape mismatch");
    require(a.output_rank() == b.output_rank(), "tt_add_scale: output rank mismatch");
    const std::size_t d = a.order();
    std::vector<DenseTensor> cores;
    if (d == 1) {
        DenseTensor c = a.core(0);
        c *= alpha;
        DenseTensor cb = b.core(0);
        cb *= beta;
        c += cb;
        cores.push_back(std::move(c));
        return TTTensor(std::move(cores));
    }
    for (std::size_t k = 0; k < d; ++k) {
        const auto& ca = a.core(k);
        const auto& cb = b.core(k);
        const std::size_t n = ca.dim(1);
        const std::size_t la = ca.dim(0), lb = cb.dim(0), ra = ca.dim(2), rb = cb.dim(2);
        const bool first = k == 0, last = k + 1 == d;
        const std::size_t left = first ? la : la + lb;
        const std::size_t right = last ? 1 : ra + rb;
        DenseTensor c({left, n, right});
        auto put = [&](std::size_t x, std::size_t i, std::size_t y, double v) { c.data()[(x * n + i) * right + y] = v; };
        for (std::size_t x = 0; x < la; ++x)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t y = 0; y < ra; ++y)
                    put(x, i, y, (first ? alpha : 1.0) * ca.data()[(x * n + i) * ra + y]);
        for (std::size_t x = 0; x < lb; ++x)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t y = 0; y < rb; ++y)
                    put(first ? x : la + x, i, last ? y : ra + y, (first ? beta : 1.0) * cb.data()[(x * n + i) * rb + y]);
        cores.push_back(std::move(c));
    }
    return TTTensor(std::move(cores));
}

TTTensor tt_scale(const TTTensor& a, double s) {
    auto cores = a.cores();
    cores.front() *= s;
    return TTTensor(std::move(cores));
}

TTTensor tt_zeros(std::size_t r0, const Shape& modes) {
    require(!modes.empty(), "tt_zeros needs at least one mode");
    std::vector<DenseTensor> cores;
    for (std::size_t k = 0; k < modes.size(); ++k) cores.emplace_back(Shape{k == 0 ? r0 : 1, modes[k], 1});
    return TTTensor(std::move(cores));
}

double tt_dot(const TTTensor& a, const TTTensor& b) {
    require(a.mode_sizes() == b.mode_sizes(), "tt_dot: shape mismatch");
    require(a.output_rank() == b.output_rank(), "tt_dot: output rank mismatch");
    Matrix m = Matrix::Identity(idx(a.output_rank()), idx(b.output_rank()));
    for (std::size_t k = 0; k < a.order(); ++k) {
        const auto& ca = a.core(k);
        const auto& cb = b.core(k);
        // t = m * B_k as r^A_{k-1} x (n r^B_k)
        Matrix t = m * Matrix(cb.as_matrix(1));
        RowMatrix trow = t;  // row-major, reinterpret as (r^A_{k-1} n) x r^B_k
        Eigen::Map<const RowMatrix> tl(trow.data(), idx(ca.dim(0) * ca.dim(1)), idx(cb.dim(2)));
        m = Matrix(ca.as_matrix(2)).transpose() * tl;
    }
    return m(0, 0);
}

double tt_norm(const TTTensor& a) {
    TTTensor l = left_orthogonalize(a);
    return l.cores().back().norm();
}

TTTensor tt_apply_modes(const TTTensor& a, std::span<const Matrix> mats) {
    require(mats.size() == a.order(), "tt_apply_modes: one matrix per mode required");
    std::vector<DenseTensor> cores;
    for (std::size_t k = 0; k < a.order(); ++k) {
        const auto& c = a.core(k);
        const auto& m = mats[k];
        require(static_cast<std::size_t>(m.cols()) == c.dim(1), "tt_apply_modes: matrix does not match mode size");
        const std::size_t r0 = c.dim(0), n = c.dim(1), r1 = c.dim(2);
        const auto n2 = static_cast<std::size_t>(m.rows());
        DenseTensor out({r0, n2, r1});
        for (std::size_t x = 0; x < r0; ++x)
            for (std::size_t i = 0; i < n2; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    const double w = m(idx(i), idx(j));
                    if (w == 0.0) continue;
                    for (std::size_t y = 0; y < r1; ++y)
                        out.data()[(x * n2 + i) * r1 + y] += w * c.data()[(x * n + j) * r1 + y];
                }
        cores.push_back(std::move(out));
    }
    return TTTensor(std::move(cores));
}

double tt_bilinear(const TTTensor& a, std::span<const Matrix> mats, const TTTensor& b) {
    return tt_dot(a, tt_apply_modes(b, mats));
}

TTTensor tt_expand_output(const TTTensor& a) {
    const std::size_t p = a.output_rank();
    DenseTensor head({1, p, p});
    for (std::size_t j = 0; j < p; ++j) head.data()[j * p + j] = 1.0;
    std::vector<DenseTensor> cores{std::move(head)};
    cores.insert(cores.end(), a.cores().begin(), a.cores().end());
    return TTTensor(std::move(cores));
}

TTTensor tt_absorb_output(const TTTensor& a) {
    require(a.order() >= 2 && a.output_rank() == 1, "tt_absorb_output needs a scalar train with an output mode");
    const auto& head = a.core(0);
    Matrix h = head.as_matrix(2);  // p x r1
    const auto& next = a.core(1);
    Matrix merged = h * Matrix(next.as_matrix(1));  // p x (n r2)
    std::vector<DenseTensor> cores{core_from_right(merged, next.dim(1), next.dim(2))};
    cores.insert(cores.end(), a.cores().begin() + 2, a.cores().end());
    return TTTensor(std::move(cores));
}

std::vector<std::size_t> unfolding_ranks(const DenseTensor& t, double rel) {
    std::vector<std::size_t> r;
    for (std::size_t k = 1; k < t.order(); ++k) r.push_back(matrix_rank(unfold(t, k), rel));
    return r;
}

}  // namespace ctt
