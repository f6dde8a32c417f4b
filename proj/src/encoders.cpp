#include "ctt/encoders.hpp"

#include "ctt/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace ctt {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

void require_identity(const FeatureBasis& basis) {
    if (basis.identity_index() < 0) throw UnsupportedBasis("basis " + basis.name() + " lacks the identity feature");
}

std::size_t id_feature(const FeatureBasis& basis) {
    require_identity(basis);
    return static_cast<std::size_t>(basis.identity_index());
}

// Merges terms with identical (out, factors) and drops zeros.
std::vector<LayerTerm> merge_terms(std::vector<LayerTerm> terms) {
    for (auto& t : terms) std::sort(t.factors.begin(), t.factors.end());
    std::map<std::pair<std::size_t, std::vector<std::pair<std::size_t, std::size_t>>>, double> acc;
    for (const auto& t : terms) acc[{t.out, t.factors}] += t.coef;
    std::vector<LayerTerm> out;
    for (const auto& [key, c] : acc)
        if (c != 0.0) out.push_back({key.first, c, key.second});
    return out;
}

TTTensor exact_round(const TTTensor& t) { return tt_round(t, TruncationPolicy::exact()); }

// Pads a square map to width p: rows/cols beyond the block are zero.
Matrix pad_matrix(const Matrix& a, std::size_t p) {
    Matrix m = Matrix::Zero(idx(p), idx(p));
    m.topLeftCorner(a.rows(), a.cols()) = a;
    return m;
}

Vector pad_vector(const Vector& b, std::size_t p) {
    Vector v = Vector::Zero(idx(p));
    v.head(b.size()) = b;
    return v;
}

}  // namespace

CTTLayer layer_from_terms(std::size_t p, std::size_t n, const std::vector<LayerTerm>& raw) {
    require(p >= 1 && n >= 1, "layer_from_terms: empty shape");
    auto terms = merge_terms(raw);
    if (terms.empty()) return CTTLayer(tt_zeros(p, Shape(p, n)));
    const auto r = idx(terms.size());
    CPTensor cp;
    cp.factors.assign(p + 1, Matrix());
    cp.factors[0] = Matrix::Zero(idx(p), r);
    for (std::size_t k = 0; k < p; ++k) {
        cp.factors[k + 1] = Matrix::Zero(idx(n), r);
        cp.factors[k + 1].row(0).setOnes();
    }
    for (Index t = 0; t < r; ++t) {
        const auto& term = terms[static_cast<std::size_t>(t)];
        require(term.out < p, "layer term output slot out of range");
        cp.factors[0](idx(term.out), t) = term.coef;
        std::vector<bool> seen(p, false);
        for (auto [slot, feat] : term.factors) {
            require(slot < p && feat < n, "layer term factor out of range");
            require(!seen[slot], "layer term uses a state slot twice");
            seen[slot] = true;
            cp.factors[slot + 1](0, t) = 0.0;
            cp.factors[slot + 1](idx(feat), t) = 1.0;
        }
    }
    return CTTLayer(exact_round(tt_absorb_output(cp_to_tt(cp))));
}

CTTLayer encode_block_affine(const FeatureBasis& basis, const Matrix& a, const Vector& b, std::size_t block) {
    const std::size_t x = id_feature(basis);
    const std::size_t n = basis.size();
    const auto c = static_cast<std::size_t>(a.rows());
    require(a.cols() == a.rows() && b.size() == a.rows() && c >= 1, "block affine map must be square with matching bias");
    require(block >= 1, "block size must be positive");
    const std::size_t p = c * block;
    Matrix at = a - Matrix::Identity(a.rows(), a.cols());
    if (p == 1) {
        DenseTensor core(Shape{1, n, 1});
        core.at({0, 0, 0}) = b(0);
        core.at({0, x, 0}) = at(0, 0);
        return CTTLayer(TTTensor({core}));
    }
    std::vector<DenseTensor> cores;
    DenseTensor first(Shape{p, n, c});
    for (std::size_t s = 0; s < c; ++s) {
        const std::size_t row = s * block;
        first.at({row, 0, 0}) = b(idx(s));
        first.at({row, x, 0}) = at(idx(s), 0);
        for (std::size_t col = 1; col < c; ++col) first.at({row, 0, col}) = at(idx(s), idx(col));
    }
    cores.push_back(std::move(first));
    for (std::size_t m = 1; m < p; ++m) {
        const bool last = m + 1 == p;
        DenseTensor core(Shape{c, n, last ? 1 : c});
        for (std::size_t ch = 0; ch < c; ++ch) {
            const std::size_t feat = (ch > 0 && ch * block == m) ? x : 0;
            core.at({ch, feat, last ? 0 : ch}) = 1.0;
        }
        cores.push_back(std::move(core));
    }
    return CTTLayer(TTTensor(std::move(cores)));
}

CTTLayer encode_affine(const FeatureBasis& basis, const Matrix& a, const Vector& b) {
    return encode_block_affine(basis, a, b, 1);
}

namespace {

// psi_k(h) = (a + h_0 h_1 - h_0, 0): one Horner step on (acc, var).
CTTLayer horner_step(const FeatureBasis& basis, double a) {
    const std::size_t x = id_feature(basis);
    return layer_from_terms(2, basis.size(), {{0, a, {}}, {0, 1.0, {{0, x}, {1, x}}}, {0, -1.0, {{0, x}}}});
}

}  // namespace

CTTModel encode_univariate_poly(const FeatureBasis& basis, const std::vector<double>& coeffs) {
    require(!coeffs.empty(), "polynomial needs at least one coefficient");
    const std::size_t deg = coeffs.size() - 1;
    std::vector<CTTLayer> layers;
    layers.push_back(layer_from_terms(2, basis.size(), {{0, coeffs[deg], {}}}));
    for (std::size_t k = deg; k-- > 0;) layers.push_back(horner_step(basis, coeffs[k]));
    return CTTModel(basis, Lift::first_slot_zero(1), std::move(layers), Retraction::select({0}, 2));
}

CTTModel encode_poly_activation(const FeatureBasis& basis, const std::vector<double>& coeffs) {
    require(!coeffs.empty(), "polynomial needs at least one coefficient");
    const std::size_t x = id_feature(basis);
    const std::size_t deg = coeffs.size() - 1;
    std::vector<CTTLayer> layers;
    layers.push_back(layer_from_terms(
        2, basis.size(), {{0, coeffs[deg], {}}, {0, -1.0, {{0, x}}}, {1, 1.0, {{0, x}}}, {1, -1.0, {{1, x}}}}));
    for (std::size_t k = deg; k-- > 0;) layers.push_back(horner_step(basis, coeffs[k]));
    return CTTModel(basis, Lift::zero_pad(1, 2), std::move(layers), Retraction::select({0}, 2));
}

void SparsePolynomial::validate() const {
    require(dim >= 1, "polynomial dimension must be positive");
    require(!exponents.empty(), "polynomial needs at least one monomial");
    require(exponents.size() == coeffs.size(), "one coefficient per multi-index");
    for (const auto& e : exponents) require(e.size() == dim, "multi-index length must equal the dimension");
}

double SparsePolynomial::operator()(const Vector& x) const {
    double s = 0.0;
    for (std::size_t t = 0; t < exponents.size(); ++t) {
        double m = coeffs[t];
        for (std::size_t j = 0; j < dim; ++j) m *= std::pow(x(idx(j)), static_cast<double>(exponents[t][j]));
        s += m;
    }
    return s;
}

std::vector<unsigned> SparsePolynomial::max_degrees() const {
    std::vector<unsigned> n(dim, 0);
    for (const auto& e : exponents)
        for (std::size_t j = 0; j < dim; ++j) n[j] = std::max(n[j], e[j]);
    return n;
}

namespace {

// floor(log_q(v)) for v >= 1.
std::size_t floor_log(std::size_t v, std::size_t q) {
    std::size_t e = 0;
    for (std::size_t pw = q; pw <= v; pw *= q) ++e;
    return e;
}

std::vector<std::size_t> digits(std::size_t v, std::size_t q) {
    std::vector<std::size_t> out;
    for (; v > 0; v /= q) out.push_back(v % q);
    return out;
}

// Collects the slot rewrites of one layer; psi_s = new_s - y_s.
struct LayerBuilder {
    std::size_t p;
    std::size_t x;
    std::vector<LayerTerm> terms;

    void set(std::size_t slot, double c, std::vector<std::size_t> prod) {
        LayerTerm t{slot, c, {}};
        for (auto s : prod) t.factors.push_back({s, x});
        terms.push_back(std::move(t));
        terms.push_back({slot, -1.0, {{slot, x}}});
    }
};

}  // namespace

std::size_t sparse_poly_layer_bound(const SparsePolynomial& poly, std::size_t q) {
    poly.validate();
    require(q >= 2, "workspace needs q >= 2");
    std::size_t l = poly.exponents.size() * (2 + poly.dim);
    for (const auto& e : poly.exponents)
        for (auto a : e) l += floor_log(a + 1, q);
    return l;
}

SparsePolyEncoding encode_sparse_poly(const FeatureBasis& basis, const SparsePolynomial& poly, std::size_t q) {
    poly.validate();
    if (q < 2) throw UnsupportedBasis("sparse polynomial encoding needs q >= 2 workspace slots");
    const std::size_t x = id_feature(basis);
    const std::size_t d = poly.dim;
    const std::size_t p = d + 2 + q;
    const std::size_t reg = d + 1;
    auto var = [](std::size_t j) { return 1 + j; };
    auto ws = [&](std::size_t i) { return d + 2 + i; };
    std::vector<CTTLayer> layers;
    auto emit = [&](LayerBuilder& b) { layers.push_back(layer_from_terms(p, basis.size(), b.terms)); };
    auto fill_ws = [&](LayerBuilder& b, std::size_t src) {
        for (std::size_t i = 0; i < q; ++i) b.set(ws(i), 1.0, {src});
    };

    for (std::size_t t = 0; t < poly.exponents.size(); ++t) {
        const auto& alpha = poly.exponents[t];
        std::vector<std::size_t> active;
        for (std::size_t j = 0; j < d; ++j)
            if (alpha[j] > 0) active.push_back(j);
        LayerBuilder init{p, x, {}};
        init.set(reg, poly.coeffs[t], {});
        if (!active.empty()) fill_ws(init, var(active[0]));
        emit(init);
        for (std::size_t a = 0; a < active.size(); ++a) {
            const auto dig = digits(alpha[active[a]], q);
            for (std::size_t k = 0; k < dig.size(); ++k) {
                LayerBuilder step{p, x, {}};
                if (dig[k] > 0) {
                    std::vector<std::size_t> prod{reg};
                    for (std::size_t i = 0; i < dig[k]; ++i) prod.push_back(ws(i));
                    step.set(reg, 1.0, prod);
                }
                if (k + 1 < dig.size()) {
                    std::vector<std::size_t> all;
                    for (std::size_t i = 0; i < q; ++i) all.push_back(ws(i));
                    for (std::size_t i = 0; i < q; ++i) step.set(ws(i), 1.0, all);
                } else if (a + 1 < active.size()) {
                    fill_ws(step, var(active[a + 1]));
                }
                emit(step);
            }
        }
        LayerBuilder acc{p, x, {}};
        acc.terms.push_back({0, 1.0, {{reg, x}}});
        emit(acc);
    }
    SparsePolyEncoding enc;
    enc.layer_count = layers.size();
    enc.layer_bound = sparse_poly_layer_bound(poly, q);
    enc.model = CTTModel(basis, Lift::first_slot_zero(d, p), std::move(layers), Retraction::select({0}, p));
    return enc;
}

TTTensor embed_layer(const CTTLayer& layer, std::size_t p, std::size_t offset) {
    const TTTensor sub = layer.to_tt();
    const std::size_t ps = sub.output_rank();
    const std::size_t n = layer.basis_size();
    require(offset + ps <= p, "embedded block exceeds the target width");
    std::vector<DenseTensor> cores;
    if (offset == 0) {
        const auto& c0 = sub.core(0);
        DenseTensor first(Shape{p, n, c0.dim(2)});
        std::copy(c0.values().begin(), c0.values().end(), first.values().begin());
        cores.push_back(std::move(first));
    } else {
        DenseTensor first(Shape{p, n, ps});
        for (std::size_t a = 0; a < ps; ++a) first.at({offset + a, 0, a}) = 1.0;
        cores.push_back(std::move(first));
        for (std::size_t m = 1; m < offset; ++m) {
            DenseTensor carry(Shape{ps, n, ps});
            for (std::size_t a = 0; a < ps; ++a) carry.at({a, 0, a}) = 1.0;
            cores.push_back(std::move(carry));
        }
        cores.push_back(sub.core(0));
    }
    for (std::size_t j = 1; j < sub.order(); ++j) cores.push_back(sub.core(j));
    while (cores.size() < p) {
        DenseTensor one(Shape{1, n, 1});
        one.at({0, 0, 0}) = 1.0;
        cores.push_back(std::move(one));
    }
    return TTTensor(std::move(cores));
}

namespace {

Lift stack_lifts(const std::vector<const Lift*>& lifts) {
    std::size_t rows = 0;
    const std::size_t d = lifts.front()->input_dim();
    for (auto* l : lifts) {
        require(l->input_dim() == d, "stacked lifts need a common input dimension");
        rows += l->output_dim();
    }
    Matrix m(idx(rows), idx(d));
    Vector c(idx(rows));
    std::size_t r = 0;
    for (auto* l : lifts) {
        m.middleRows(idx(r), l->matrix.rows()) = l->matrix;
        c.segment(idx(r), l->offset.size()) = l->offset;
        r += l->output_dim();
    }
    return Lift::custom(std::move(m), std::move(c));
}

}  // namespace

CTTModel concat_ct(const CTTModel& f, const CTTModel& g) {
    require(f.basis() == g.basis(), "concatenation needs a shared basis");
    const std::size_t pf = f.width(), pg = g.width(), p = pf + pg;
    const std::size_t depth = std::max(f.depth(), g.depth());
    std::vector<CTTLayer> layers;
    for (std::size_t l = 0; l < depth; ++l) {
        TTTensor sum = tt_zeros(p, Shape(p, f.basis().size()));
        if (l < f.depth()) sum = tt_add_scale(sum, embed_layer(f.layer(l), p, 0), 1.0, 1.0);
        if (l < g.depth()) sum = tt_add_scale(sum, embed_layer(g.layer(l), p, pf), 1.0, 1.0);
        layers.emplace_back(exact_round(sum));
    }
    std::vector<std::size_t> slots = f.retraction().slots;
    for (auto s : g.retraction().slots) slots.push_back(pf + s);
    return CTTModel(f.basis(), stack_lifts({&f.lift(), &g.lift()}), std::move(layers),
                    Retraction::select(std::move(slots), p));
}

CTTModel vectorize_activation(const CTTModel& sigma, std::size_t d) {
    require(sigma.input_dim() == 1 && sigma.output_dim() == 1, "activation model must be scalar");
    require(d >= 1, "fan-out must be positive");
    const std::size_t ps = sigma.width(), p = d * ps;
    std::vector<CTTLayer> layers;
    for (const auto& layer : sigma.layers()) {
        TTTensor sum = embed_layer(layer, p, 0);
        for (std::size_t i = 1; i < d; ++i) sum = tt_add_scale(sum, embed_layer(layer, p, i * ps), 1.0, 1.0);
        layers.emplace_back(exact_round(sum));
    }
    Matrix m = Matrix::Zero(idx(p), idx(d));
    Vector c(idx(p));
    std::vector<std::size_t> slots;
    for (std::size_t i = 0; i < d; ++i) {
        m.block(idx(i * ps), idx(i), idx(ps), 1) = sigma.lift().matrix;
        c.segment(idx(i * ps), idx(ps)) = sigma.lift().offset;
        slots.push_back(i * ps + sigma.retraction().slots[0]);
    }
    return CTTModel(sigma.basis(), Lift::custom(std::move(m), std::move(c)), std::move(layers),
                    Retraction::select(std::move(slots), p));
}

double Activation::operator()(double x) const {
    switch (kind) {
        case Kind::identity: return x;
        case Kind::relu: return x > 0.0 ? x : 0.0;
        case Kind::polynomial: {
            double s = 0.0;
            for (std::size_t k = coeffs.size(); k-- > 0;) s = s * x + coeffs[k];
            return s;
        }
    }
    return x;
}

void DNNSpec::validate() const {
    require(!weights.empty(), "network needs at least one affine map");
    require(weights.size() == biases.size(), "one bias per affine map");
    for (std::size_t l = 0; l < weights.size(); ++l) {
        require(biases[l].size() == weights[l].rows(), "bias length must equal the map's output dimension");
        if (l > 0) require(weights[l].cols() == weights[l - 1].rows(), "affine maps must chain");
    }
    if (activation.kind == Activation::Kind::polynomial)
        require(!activation.coeffs.empty(), "polynomial activation needs coefficients");
}

std::size_t DNNSpec::max_width() const {
    auto w = static_cast<std::size_t>(weights.front().cols());
    for (const auto& m : weights) w = std::max(w, static_cast<std::size_t>(m.rows()));
    return w;
}

Vector DNNSpec::operator()(const Vector& x) const {
    Vector h = x;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        h = weights[l] * h + biases[l];
        if (l + 1 < weights.size()) h = h.unaryExpr([this](double v) { return activation(v); });
    }
    return h;
}

DNNEncoding encode_dnn(const FeatureBasis& basis, const DNNSpec& spec) {
    spec.validate();
    require_identity(basis);
    const std::size_t depth = spec.weights.size();
    const std::size_t pf = spec.max_width();
    const std::size_t d = spec.input_dim(), d_o = spec.output_dim();
    DNNEncoding enc;
    std::vector<CTTLayer> layers;
    if (spec.activation.kind != Activation::Kind::polynomial) {
        const bool relu = spec.activation.kind == Activation::Kind::relu;
        if (relu && depth > 1 && basis.abs_index() < 0)
            throw UnsupportedBasis("ReLU is not in the span of basis " + basis.name() + "; use relu_abs");
        const std::size_t x = id_feature(basis);
        for (std::size_t l = 0; l < depth; ++l) {
            layers.push_back(encode_affine(basis, pad_matrix(spec.weights[l], pf), pad_vector(spec.biases[l], pf)));
            enc.affine_layer.push_back(true);
            if (l + 1 == depth) break;
            std::vector<LayerTerm> terms;
            if (relu) {
                const auto abs = static_cast<std::size_t>(basis.abs_index());
                for (std::size_t i = 0; i < static_cast<std::size_t>(spec.weights[l].rows()); ++i) {
                    terms.push_back({i, -0.5, {{i, x}}});
                    terms.push_back({i, 0.5, {{i, abs}}});
                }
            }
            layers.push_back(layer_from_terms(pf, basis.size(), terms));
            enc.affine_layer.push_back(false);
        }
        enc.layer_bound = 2 * depth - 1;
        enc.model = CTTModel(basis, Lift::zero_pad(d, pf), std::move(layers), Retraction::first_slots(d_o, pf));
        return enc;
    }
    const CTTModel sigma = encode_poly_activation(basis, spec.activation.coeffs);
    const std::size_t ps = sigma.width(), p = pf * ps;
    const CTTModel block = vectorize_activation(sigma, pf);
    for (std::size_t l = 0; l < depth; ++l) {
        layers.push_back(
            encode_block_affine(basis, pad_matrix(spec.weights[l], pf), pad_vector(spec.biases[l], pf), ps));
        enc.affine_layer.push_back(true);
        if (l + 1 == depth) break;
        for (const auto& s : block.layers()) {
            layers.push_back(s);
            enc.affine_layer.push_back(false);
        }
    }
    Matrix m = Matrix::Zero(idx(p), idx(d));
    for (std::size_t i = 0; i < d; ++i) m(idx(i * ps), idx(i)) = 1.0;
    std::vector<std::size_t> slots;
    for (std::size_t o = 0; o < d_o; ++o) slots.push_back(o * ps);
    enc.layer_bound = depth + (depth - 1) * sigma.depth();
    enc.model = CTTModel(basis, Lift::custom(std::move(m), Vector::Zero(idx(p))), std::move(layers),
                         Retraction::select(std::move(slots), p));
    return enc;
}

namespace {

void check_precision(const Matrix& gamma) {
    require(gamma.rows() == gamma.cols() && gamma.rows() >= 1, "precision matrix must be square");
    const double scale = std::max(1.0, gamma.norm());
    require((gamma - gamma.transpose()).norm() <= 1e-12 * scale, "precision matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(gamma, Eigen::EigenvaluesOnly);
    require(es.eigenvalues().minCoeff() >= -1e-12 * scale, "precision matrix must be positive (semi)definite");
}

}  // namespace

CTTLayer gaussian_flow_layer(const Matrix& gamma, double tau) {
    check_precision(gamma);
    const auto basis = FeatureBasis::quadratic();
    const std::size_t x = 1, sq = static_cast<std::size_t>(basis.square_index());
    const auto d = static_cast<std::size_t>(gamma.rows());
    std::vector<LayerTerm> terms;
    for (std::size_t a = 0; a < d; ++a) {
        terms.push_back({0, -0.5 * tau * gamma(idx(a), idx(a)), {{0, x}, {a + 1, sq}}});
        for (std::size_t b = a + 1; b < d; ++b)
            terms.push_back({0, -tau * gamma(idx(a), idx(b)), {{0, x}, {a + 1, x}, {b + 1, x}}});
    }
    return layer_from_terms(d + 1, basis.size(), terms);
}

CTTModel build_gaussian_flow(const Matrix& gamma, std::size_t steps) {
    require(steps >= 1, "flow needs at least one step");
    const auto d = static_cast<std::size_t>(gamma.rows());
    const CTTLayer layer = gaussian_flow_layer(gamma, 1.0 / static_cast<double>(steps));
    return CTTModel(FeatureBasis::quadratic(), Lift::unit_first(d), std::vector<CTTLayer>(steps, layer),
                    Retraction::select({0}, d + 1));
}

std::vector<std::size_t> predicted_permuted_markov_ranks(const std::vector<std::size_t>& m, std::size_t d) {
    require(d >= 3, "Markov rank formula needs d >= 3");
    require(m.size() == d - 1, "chain ranks must list m_2..m_d");
    auto mj = [&](std::size_t j) { return m[j - 2]; };
    const std::size_t half = (d + 1) / 2;
    std::vector<std::size_t> r;
    for (std::size_t k = 1; k < d; ++k) {
        std::size_t lo, hi;
        if (k <= half) {
            lo = 2;
            hi = std::min(2 * k, d);
        } else {
            lo = 2 * (k - half) + 2;
            hi = d;
        }
        std::size_t prod = 1;
        for (std::size_t j = lo; j <= hi; ++j) prod *= mj(j);
        r.push_back(prod);
    }
    return r;
}

std::vector<std::size_t> markov_permutation(std::size_t d) {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < d; i += 2) s.push_back(i);
    for (std::size_t i = 1; i < d; i += 2) s.push_back(i);
    return s;
}

Matrix permutation_matrix(const std::vector<std::size_t>& perm) {
    const auto d = perm.size();
    Matrix p = Matrix::Zero(idx(d), idx(d));
    std::vector<bool> seen(d, false);
    for (std::size_t k = 0; k < d; ++k) {
        require(perm[k] < d && !seen[perm[k]], "not a permutation");
        seen[perm[k]] = true;
        p(idx(k), idx(perm[k])) = 1.0;
    }
    return p;
}

DenseTensor markov_density(const std::vector<std::size_t>& m, std::size_t grid, std::uint64_t seed) {
    const std::size_t d = m.size() + 1;
    require(d >= 2 && grid >= 1, "chain needs at least two variables");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    Vector f1(idx(grid));
    for (auto& v : f1) v = u(rng);
    std::vector<Matrix> k;
    for (auto r : m) {
        Matrix a(idx(grid), idx(r)), b(idx(grid), idx(r));
        for (Index i = 0; i < a.size(); ++i) a.data()[i] = u(rng);
        for (Index i = 0; i < b.size(); ++i) b.data()[i] = u(rng);
        k.push_back(a * b.transpose());
    }
    DenseTensor t(Shape(d, grid));
    std::vector<std::size_t> index(d, 0);
    for (std::size_t flat = 0; flat < t.size(); ++flat) {
        std::size_t rem = flat;
        for (std::size_t j = d; j-- > 0;) {
            index[j] = rem % grid;
            rem /= grid;
        }
        double v = f1(idx(index[0]));
        for (std::size_t j = 1; j < d; ++j) v *= k[j - 1](idx(index[j - 1]), idx(index[j]));
        t.values()[flat] = v;
    }
    return t;
}

DenseTensor permute_modes(const DenseTensor& t, const std::vector<std::size_t>& perm) {
    const std::size_t d = t.order();
    require(perm.size() == d, "permutation length must equal tensor order");
    (void)permutation_matrix(perm);
    Shape s(d);
    for (std::size_t k = 0; k < d; ++k) s[k] = t.dim(perm[k]);
    DenseTensor out(s);
    std::vector<std::size_t> index(d), orig(d);
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
        std::size_t rem = flat;
        for (std::size_t j = d; j-- > 0;) {
            index[j] = rem % s[j];
            rem /= s[j];
        }
        for (std::size_t k = 0; k < d; ++k) orig[perm[k]] = index[k];
        out.values()[flat] = t(orig);
    }
    return out;
}

}  // namespace ctt
