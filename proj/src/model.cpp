#include "ctt/model.hpp"

#include "ctt/error.hpp"

#include <cmath>

namespace ctt {

Lift Lift::identity(std::size_t d) {
    Lift l;
    l.kind = Kind::identity;
    l.matrix = Matrix::Identity(d, d);
    l.offset = Vector::Zero(d);
    return l;
}

Lift Lift::zero_pad(std::size_t d, std::size_t p) {
    require(p >= d, "zero_pad lift needs p >= d");
    Lift l;
    l.kind = Kind::zero_pad;
    l.matrix = Matrix::Zero(p, d);
    l.matrix.topRows(d).setIdentity();
    l.offset = Vector::Zero(p);
    return l;
}

Lift Lift::first_slot_zero(std::size_t d, std::size_t p) {
    if (p == 0) p = d + 1;
    require(p >= d + 1, "first_slot_zero lift needs p >= d + 1");
    Lift l;
    l.kind = Kind::first_slot_zero;
    l.matrix = Matrix::Zero(p, d);
    l.matrix.block(1, 0, d, d).setIdentity();
    l.offset = Vector::Zero(p);
    return l;
}

Lift Lift::unit_first(std::size_t d, std::size_t p) {
    Lift l = first_slot_zero(d, p);
    l.kind = Kind::unit_first;
    l.offset(0) = 1.0;
    return l;
}

Lift Lift::custom(Matrix m, Vector c) {
    require(m.rows() == c.size(), "lift offset length must equal output width");
    Lift l;
    l.kind = Kind::custom;
    l.matrix = std::move(m);
    l.offset = std::move(c);
    return l;
}

Vector Lift::apply(const Vector& x) const {
    require(static_cast<std::size_t>(x.size()) == input_dim(), "lift: input dimension mismatch");
    return matrix * x + offset;
}

Retraction Retraction::first_slots(std::size_t d_o, std::size_t p) {
    std::vector<std::size_t> s(d_o);
    for (std::size_t i = 0; i < d_o; ++i) s[i] = i;
    return select(std::move(s), p);
}

Retraction Retraction::select(std::vector<std::size_t> slots, std::size_t p) {
    for (auto s : slots) require(s < p, "retraction slot out of range");
    return {std::move(slots), p};
}

Vector Retraction::apply(const Vector& h) const {
    require(static_cast<std::size_t>(h.size()) == width, "retraction: state dimension mismatch");
    Vector out(static_cast<Eigen::Index>(slots.size()));
    for (std::size_t o = 0; o < slots.size(); ++o) out(o) = h(slots[o]);
    return out;
}

Matrix Retraction::matrix() const {
    Matrix m = Matrix::Zero(slots.size(), width);
    for (std::size_t o = 0; o < slots.size(); ++o) m(o, slots[o]) = 1.0;
    return m;
}

CTTLayer::CTTLayer(DenseTensor coef) : coef_(std::move(coef)) {
    const auto& s = dense().shape();
    require(s.size() >= 2, "dense layer needs shape (p, n, ..., n)");
    require(s.size() == s[0] + 1, "dense layer must carry p feature modes");
    for (std::size_t k = 2; k < s.size(); ++k) require(s[k] == s[1], "dense layer feature modes must share n");
}

CTTLayer::CTTLayer(TTTensor coef) : coef_(std::move(coef)) {
    const auto& t = tt();
    t.validate();
    require(t.order() == t.output_rank(), "TT layer must have p modes and r0 = p");
    for (auto n : t.mode_sizes()) require(n == t.mode_sizes().front(), "TT layer modes must share n");
}

std::size_t CTTLayer::width() const { return is_tt() ? tt().output_rank() : dense().dim(0); }

std::size_t CTTLayer::basis_size() const { return is_tt() ? tt().mode_sizes().front() : dense().dim(1); }

std::size_t CTTLayer::dense_size() const {
    std::size_t s = width();
    for (std::size_t k = 0; k < width(); ++k) s *= basis_size();
    return s;
}

std::size_t CTTLayer::parameter_count() const { return is_tt() ? tt().parameter_count() : dense().size(); }

DenseTensor CTTLayer::to_dense() const {
    if (!is_tt()) return dense();
    DenseTensor t = reconstruct(tt());
    if (t.order() == width()) {
        // r0 = 1 only when p = 1: reconstruct drops the unit output index.
        Shape s{1};
        for (auto n : t.shape()) s.push_back(n);
        t = t.reshaped(s);
    }
    return t;
}

TTTensor CTTLayer::to_tt(const TruncationPolicy& policy) const {
    if (is_tt()) return policy.kind == TruncationPolicy::Kind::relative && policy.eps == 0.0 ? tt() : tt_round(tt(), policy);
    return tt_svd_vector(dense(), policy);
}

std::vector<std::size_t> CTTLayer::tt_ranks() const {
    return is_tt() ? tt().internal_ranks() : tt_svd_vector(dense(), TruncationPolicy::exact()).internal_ranks();
}

CTTLayer zero_layer(std::size_t p, std::size_t n) {
    Shape s{p};
    for (std::size_t k = 0; k < p; ++k) s.push_back(n);
    return CTTLayer(DenseTensor(s));
}

CTTModel::CTTModel(FeatureBasis basis, Lift lift, std::vector<CTTLayer> layers, Retraction retraction)
    : basis_(basis), lift_(std::move(lift)), layers_(std::move(layers)), retraction_(std::move(retraction)) {
    validate();
}

void CTTModel::validate() const {
    const auto p = width();
    require(p >= 1, "model width must be positive");
    require(static_cast<std::size_t>(lift_.offset.size()) == p, "lift offset length mismatch");
    require(retraction_.width == p, "retraction width must equal lift output width");
    for (const auto& l : layers_) {
        require(l.width() == p, "layer width must equal model width");
        require(l.basis_size() == basis_.size(), "layer basis size must equal the feature basis size");
    }
}

Vector CTTModel::operator()(const Vector& x) const { return forward(*this, x).output; }

CTTModel densified(const CTTModel& m) {
    std::vector<CTTLayer> layers;
    for (const auto& l : m.layers()) layers.emplace_back(l.to_dense());
    return CTTModel(m.basis(), m.lift(), std::move(layers), m.retraction());
}

Vector feature_tensor(const FeatureBasis& basis, const Vector& h) {
    const auto n = static_cast<Eigen::Index>(basis.size());
    Vector phi(n);
    Vector out = Vector::Ones(1);
    for (Eigen::Index k = 0; k < h.size(); ++k) {
        basis.eval(h(k), phi.data());
        Vector next(out.size() * n);
        for (Eigen::Index a = 0; a < out.size(); ++a) next.segment(a * n, n) = out(a) * phi;
        out.swap(next);
    }
    return out;
}

namespace {

// Kronecker product of per-mode vectors, first mode slowest.
Vector kron_all(const std::vector<Vector>& v) {
    Vector out = Vector::Ones(1);
    for (const auto& f : v) {
        const auto n = f.size();
        Vector next(out.size() * n);
        for (Eigen::Index a = 0; a < out.size(); ++a) next.segment(a * n, n) = out(a) * f;
        out.swap(next);
    }
    return out;
}

// Core slice contraction: sum_i U(:, i, :) w_i.
Matrix contract_core(const DenseTensor& c, const Vector& w) {
    const auto r0 = c.dim(0), n = c.dim(1), r1 = c.dim(2);
    Matrix m = Matrix::Zero(r0, r1);
    const double* d = c.data();
    for (std::size_t a = 0; a < r0; ++a)
        for (std::size_t i = 0; i < n; ++i) {
            const double wi = w(i);
            if (wi == 0.0) continue;
            for (std::size_t b = 0; b < r1; ++b) m(a, b) += d[(a * n + i) * r1 + b] * wi;
        }
    return m;
}

void check_state(const CTTLayer& layer, const FeatureBasis& basis, const Vector& h) {
    require(static_cast<std::size_t>(h.size()) == layer.width(), "layer input dimension mismatch");
    require(layer.basis_size() == basis.size(), "layer basis size mismatch");
}

}  // namespace

void layer_eval_jacobian(const CTTLayer& layer, const FeatureBasis& basis, const Vector& h, Vector& value,
                         Matrix& jac) {
    check_state(layer, basis, h);
    const auto p = static_cast<std::size_t>(h.size());
    const auto n = static_cast<Eigen::Index>(basis.size());
    std::vector<Vector> phi(p, Vector(n)), dphi(p, Vector(n));
    for (std::size_t k = 0; k < p; ++k) basis.eval(h(k), phi[k].data(), dphi[k].data());
    jac.resize(p, p);
    if (layer.is_tt()) {
        const auto& cores = layer.tt().cores();
        std::vector<Matrix> m(p), dm(p);
        for (std::size_t k = 0; k < p; ++k) {
            m[k] = contract_core(cores[k], phi[k]);
            dm[k] = contract_core(cores[k], dphi[k]);
        }
        std::vector<Matrix> left(p + 1);
        left[0] = Matrix::Identity(p, p);
        for (std::size_t k = 0; k < p; ++k) left[k + 1] = left[k] * m[k];
        Matrix right = Matrix::Ones(1, 1);
        for (std::size_t k = p; k-- > 0;) {
            jac.col(k) = left[k] * dm[k] * right;
            right = m[k] * right;
        }
        value = left[p].col(0);
        return;
    }
    const auto& c = layer.dense();
    const auto m = static_cast<Eigen::Index>(c.size() / p);
    Eigen::Map<const RowMatrix> psi(c.data(), static_cast<Eigen::Index>(p), m);
    value = psi * kron_all(phi);
    for (std::size_t k = 0; k < p; ++k) {
        std::swap(phi[k], dphi[k]);
        jac.col(k) = psi * kron_all(phi);
        std::swap(phi[k], dphi[k]);
    }
}

Vector layer_eval(const CTTLayer& layer, const FeatureBasis& basis, const Vector& h) {
    check_state(layer, basis, h);
    const auto p = static_cast<std::size_t>(h.size());
    const auto n = static_cast<Eigen::Index>(basis.size());
    if (layer.is_tt()) {
        Vector phi(n);
        const auto& cores = layer.tt().cores();
        Vector right = Vector::Ones(1);
        for (std::size_t k = p; k-- > 0;) {
            basis.eval(h(k), phi.data());
            right = contract_core(cores[k], phi) * right;
        }
        return right;
    }
    const auto& c = layer.dense();
    Eigen::Map<const RowMatrix> psi(c.data(), static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(c.size() / p));
    return psi * feature_tensor(basis, h);
}

Matrix layer_jacobian(const CTTLayer& layer, const FeatureBasis& basis, const Vector& h) {
    Vector v;
    Matrix j;
    layer_eval_jacobian(layer, basis, h, v, j);
    return j;
}

Trajectory forward(const CTTModel& model, const Vector& x) {
    Trajectory t;
    t.states.reserve(model.depth() + 1);
    t.states.push_back(model.lift().apply(x));
    for (const auto& l : model.layers()) {
        const Vector& u = t.states.back();
        t.states.push_back(u + layer_eval(l, model.basis(), u));
    }
    t.output = model.retraction().apply(t.states.back());
    return t;
}

Matrix state_to_output_jacobian(const CTTModel& model, const Trajectory& traj, std::size_t l) {
    require(l <= model.depth(), "state index out of range");
    require(traj.states.size() == model.depth() + 1, "trajectory does not match model depth");
    Matrix s = model.retraction().matrix();
    for (std::size_t k = model.depth(); k > l; --k)
        s += s * layer_jacobian(model.layer(k - 1), model.basis(), traj.states[k - 1]);
    return s;
}

Matrix parameter_jacobian(const CTTModel& model, const Trajectory& traj, std::size_t l) {
    require(l >= 1 && l <= model.depth(), "layer index must be in 1..L");
    const Matrix s = state_to_output_jacobian(model, traj, l);
    const Vector f = feature_tensor(model.basis(), traj.states[l - 1]);
    const auto p = s.cols(), m = f.size();
    Matrix j(s.rows(), p * m);
    for (Eigen::Index o = 0; o < s.rows(); ++o)
        for (Eigen::Index a = 0; a < p; ++a) j.row(o).segment(a * m, m) = s(o, a) * f.transpose();
    return j;
}

LossResult loss_and_residual(const CTTModel& model, const Dataset& data) {
    require(data.size() > 0, "loss_and_residual: empty dataset");
    require(static_cast<std::size_t>(data.y.cols()) == model.output_dim(), "target dimension mismatch");
    LossResult r;
    r.residuals.resize(data.x.rows(), data.y.cols());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
        Vector out = forward(model, data.x.row(i).transpose()).output;
        r.residuals.row(i) = (out - data.y.row(i).transpose()).transpose();
        acc += r.residuals.row(i).squaredNorm();
    }
    r.loss = 0.5 * acc / static_cast<double>(data.size());
    return r;
}

double relative_error(const CTTModel& model, const Dataset& data) {
    const auto r = loss_and_residual(model, data);
    const double den = data.y.squaredNorm();
    const double num = r.residuals.squaredNorm();
    if (den == 0.0) return std::sqrt(num);
    return std::sqrt(num / den);
}

}  // namespace ctt
