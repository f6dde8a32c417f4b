#include "ctt/optim.hpp"

#include "ctt/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>
#include <ostream>

namespace ctt {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

Vector flatten(const DenseTensor& t) { return Eigen::Map<const Vector>(t.data(), idx(t.size())); }

DenseTensor with_values(const DenseTensor& shape_of, const Vector& v) {
    DenseTensor t(shape_of.shape());
    std::copy(v.data(), v.data() + v.size(), t.data());
    return t;
}

// Coefficients as p x n^p.
Matrix coef_matrix(const CTTLayer& layer) {
    const DenseTensor d = layer.to_dense();
    const auto p = idx(layer.width());
    return Eigen::Map<const RowMatrix>(d.data(), p, idx(d.size()) / p);
}

CTTLayer layer_from_matrix(const CTTLayer& like, const Matrix& m, const TrainConfig& cfg) {
    DenseTensor d = like.to_dense();
    Eigen::Map<RowMatrix>(d.data(), m.rows(), m.cols()) = m;
    return apply_rank_policy(d, cfg);
}

Dataset subsample(const Dataset& data, std::size_t batch, std::mt19937_64& rng) {
    if (batch == 0 || batch >= data.size()) return data;
    std::vector<Index> order(data.size());
    std::iota(order.begin(), order.end(), Index{0});
    for (std::size_t i = 0; i < batch; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
        std::swap(order[i], order[pick(rng)]);
    }
    Dataset out{Matrix(idx(batch), data.x.cols()), Matrix(idx(batch), data.y.cols())};
    for (std::size_t i = 0; i < batch; ++i) {
        out.x.row(idx(i)) = data.x.row(order[i]);
        out.y.row(idx(i)) = data.y.row(order[i]);
    }
    return out;
}

std::vector<std::size_t> layer_ranks_for_als(const CTTModel& model, const TrainConfig& cfg) {
    std::vector<std::size_t> r{model.width()};
    for (std::size_t k = 1; k < model.width(); ++k)
        r.push_back(cfg.tt_ranks.empty() ? (std::size_t{1} << 20)
                                         : (cfg.tt_ranks.size() == 1 ? cfg.tt_ranks[0] : cfg.tt_ranks.at(k - 1)));
    return r;
}

}  // namespace

Algorithm algorithm_from_name(const std::string& s) {
    if (s == "msa") return Algorithm::msa;
    if (s == "ngd") return Algorithm::ngd;
    if (s == "adam") return Algorithm::adam;
    throw std::invalid_argument("unknown algorithm '" + s + "'");
}

std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::msa: return "msa";
        case Algorithm::ngd: return "ngd";
        case Algorithm::adam: return "adam";
    }
    return "ngd";
}

void TrainConfig::validate() const {
    require(alpha > 0.0, "step size must be positive");
    require(lambda >= 0.0, "Tikhonov parameter must be non-negative");
    if (algorithm == Algorithm::msa) {
        require(R > 0.0, "MSA needs R > 0");
        require(gamma >= 0.0, "MSA needs gamma >= 0");
    }
}

CTTLayer apply_rank_policy(const DenseTensor& coef, const TrainConfig& cfg) {
    CTTLayer dense(coef);
    if (cfg.tt_ranks.empty()) return dense;
    return CTTLayer(dense.to_tt(TruncationPolicy::max_ranks(cfg.tt_ranks)));
}

std::vector<CTTLayer> init_layers(std::size_t p, std::size_t n, std::size_t depth, double c, std::uint64_t seed) {
    require(depth >= 1, "need at least one layer");
    require(c >= 0.0, "variance scale must be non-negative");
    Shape s{p};
    for (std::size_t k = 0; k < p; ++k) s.push_back(n);
    const double var = c / (static_cast<double>(depth) * std::pow(static_cast<double>(n), static_cast<double>(p)));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    const double sd = std::sqrt(var);
    std::vector<CTTLayer> layers;
    for (std::size_t l = 0; l < depth; ++l) {
        DenseTensor t(s);
        for (auto& v : t.values()) v = sd * nd(rng);
        layers.emplace_back(std::move(t));
    }
    return layers;
}

CostateSet costates(const CTTModel& model, const BatchForward& fw, const Matrix& y, double R, MsaRegularization reg) {
    require(fw.layer_jac.size() == model.depth(), "costates need layer Jacobians");
    const std::size_t depth = model.depth();
    const Matrix rmat = model.retraction().matrix();
    CostateSet cs;
    cs.lambda.assign(depth + 1, Matrix());
    cs.lambda[depth] = 2.0 * (fw.output - y) * rmat;
    for (std::size_t k = depth; k-- > 0;) {
        Matrix lam = cs.lambda[k + 1];
        for (std::size_t i = 0; i < fw.batch(); ++i) {
            const auto row = idx(i);
            const Matrix& dj = fw.layer_jac[k][i];
            Vector next = cs.lambda[k + 1].row(row).transpose();
            Vector v = next + dj.transpose() * next;
            if (reg == MsaRegularization::natural) {
                Vector psi = (fw.states[k + 1].row(row) - fw.states[k].row(row)).transpose();
                v += R * dj.transpose() * psi;
            }
            lam.row(row) = v.transpose();
        }
        cs.lambda[k] = std::move(lam);
    }
    return cs;
}

double control_cost(const CTTModel& model, const Vector& u0, const Vector& y, double R, MsaRegularization reg) {
    Vector u = u0;
    double cost = 0.0;
    for (const auto& layer : model.layers()) {
        Vector v = layer_eval(layer, model.basis(), u);
        if (reg == MsaRegularization::natural) {
            cost += 0.5 * R * v.squaredNorm();
        } else {
            const double f = layer.to_dense().norm();
            cost += 0.5 * R * f * f;
        }
        u += v;
    }
    return cost + (model.retraction().matrix() * u - y).squaredNorm();
}

MsaSystem msa_system(const CTTModel& model, const BatchForward& fw, const CostateSet& cs, std::size_t l) {
    require(l >= 1 && l <= model.depth(), "layer index out of range");
    const std::size_t p = model.width(), b = fw.batch();
    const double inv_b = 1.0 / static_cast<double>(b);
    MsaSystem sys;
    sys.rhs.factors.assign(p + 1, Matrix());
    sys.rhs.factors[0] = -inv_b * cs.lambda[l].transpose();
    const auto n = idx(model.basis().size());
    for (std::size_t k = 0; k < p; ++k) sys.rhs.factors[k + 1] = Matrix(n, idx(b));
    for (std::size_t i = 0; i < b; ++i) {
        std::vector<Matrix> term{inv_b * Matrix::Identity(idx(p), idx(p))};
        for (std::size_t k = 0; k < p; ++k) {
            Vector phi = model.basis().eval(fw.states[l - 1](idx(i), idx(k)));
            term.push_back(phi * phi.transpose());
            sys.rhs.factors[k + 1].col(idx(i)) = phi;
        }
        sys.op.terms.push_back(std::move(term));
    }
    return sys;
}

CTTModel msa_update(const CTTModel& model, const Dataset& batch, const TrainConfig& cfg, MsaReport* report) {
    cfg.validate();
    const auto fw = forward_batch(model, batch.x, true, cfg.exec);
    const auto cs = costates(model, fw, batch.y, cfg.R, cfg.msa_reg);
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    const double R = cfg.R, g = cfg.gamma;
    CTTModel out = model;
    MsaReport rep;
    for (std::size_t l = 1; l <= model.depth(); ++l) {
        const CTTLayer& old = model.layer(l - 1);
        bool ridge = false;
        if (cfg.msa_solver == MsaSolver::als) {
            auto sys = msa_system(model, fw, cs, l);
            TTTensor old_tt = tt_expand_output(old.to_tt());
            const auto ranks = layer_ranks_for_als(model, cfg);
            TTTensor next;
            if (cfg.msa_reg == MsaRegularization::natural) {
                ALSReport ar;
                TTTensor z = als_solve(sys.op, sys.rhs, {ranks, 10, 1e-12, cfg.seed}, &ar);
                ridge = ar.regularized;
                next = tt_scale(tt_add_scale(z, old_tt, 1.0, g), 1.0 / (R + g));
            } else {
                CPOperator op;
                std::vector<Matrix> id;
                for (std::size_t k = 0; k < sys.op.order(); ++k) {
                    const auto n = sys.op.terms[0][k].rows();
                    id.push_back(Matrix::Identity(n, n));
                }
                id[0] *= R;
                op.terms.push_back(id);
                TTTensor rhs = tt_round(cp_to_tt(sys.rhs), TruncationPolicy::exact());
                if (g > 0.0) {
                    for (auto t : sys.op.terms) {
                        t[0] *= g;
                        op.terms.push_back(t);
                        rhs = tt_round(tt_add_scale(rhs, tt_apply_modes(old_tt, t), 1.0, 1.0),
                                       TruncationPolicy::exact());
                    }
                }
                ALSReport ar;
                next = als_solve(op, rhs, {ranks, 10, 1e-12, cfg.seed}, &ar);
                ridge = ar.regularized;
            }
            if (!cfg.tt_ranks.empty()) {
                std::vector<std::size_t> trunc{ranks.begin(), ranks.end()};
                next = tt_round(next, TruncationPolicy::max_ranks(trunc));
            }
            TTTensor absorbed = tt_absorb_output(next);
            out.layer(l - 1) = cfg.tt_ranks.empty() ? CTTLayer(CTTLayer(absorbed).to_dense()) : CTTLayer(absorbed);
        } else {
            const Matrix f = feature_batch(model.basis(), fw.states[l - 1], cfg.exec);
            const Matrix rhs = -inv_b * f.transpose() * cs.lambda[l];  // n^p x p
            const Matrix pold = coef_matrix(old).transpose();
            const Matrix m = inv_b * f.transpose() * f;
            Matrix sys;
            Matrix b;
            if (cfg.msa_reg == MsaRegularization::natural) {
                sys = m;
                b = rhs;
            } else {
                sys = R * Matrix::Identity(m.rows(), m.cols()) + g * m;
                b = g * m * pold + rhs;
            }
            Eigen::LDLT<Matrix> ldlt(sys);
            if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14) {
                const double scale = std::max(1e-300, sys.diagonal().cwiseAbs().maxCoeff());
                sys.diagonal().array() += std::max(cfg.lambda, 1e-12) * scale;
                ldlt.compute(sys);
                ridge = true;
            }
            Matrix z = ldlt.solve(b);
            Matrix pnew = cfg.msa_reg == MsaRegularization::natural ? Matrix((z + g * pold) / (R + g)) : z;
            out.layer(l - 1) = layer_from_matrix(old, pnew.transpose(), cfg);
        }
        rep.regularized.push_back(ridge);
    }
    if (report) *report = std::move(rep);
    return out;
}

GramData assemble_gram(const CTTModel& model, const BatchForward& fw, std::size_t l, Exec exec) {
    GramData g;
    g.layer = l;
    const Matrix j = parameter_jacobian_batch(model, fw, l, exec);
    g.dense = gram_from_jacobian(j, fw.batch(), exec);
    return g;
}

Matrix Sketch::dense() const {
    require(!factors.empty(), "empty sketch");
    const double scale = 1.0 / std::sqrt(static_cast<double>(factors.size()));
    std::size_t n = 1;
    for (const auto& f : factors.front()) n *= static_cast<std::size_t>(f.size());
    Matrix s(idx(n), idx(factors.size()));
    for (std::size_t j = 0; j < factors.size(); ++j) {
        Vector v = factors[j][0];
        for (std::size_t k = 1; k < factors[j].size(); ++k) {
            Vector w(v.size() * factors[j][k].size());
            for (Index a = 0; a < v.size(); ++a) w.segment(a * factors[j][k].size(), factors[j][k].size()) = v(a) * factors[j][k];
            v = std::move(w);
        }
        s.col(idx(j)) = scale * v;
    }
    return s;
}

Sketch draw_sketch(std::size_t p, std::size_t n, std::size_t s, std::mt19937_64& rng) {
    require(s >= 1, "sketch size must be positive");
    std::normal_distribution<double> nd;
    Sketch sk;
    for (std::size_t j = 0; j < s; ++j) {
        std::vector<Vector> f;
        Vector a(idx(p));
        for (auto& v : a) v = nd(rng);
        f.push_back(std::move(a));
        for (std::size_t k = 0; k < p; ++k) {
            Vector b(idx(n));
            for (auto& v : b) v = nd(rng);
            f.push_back(std::move(b));
        }
        sk.factors.push_back(std::move(f));
    }
    return sk;
}

Matrix sketch_images(const CTTModel& model, const BatchForward& fw, std::size_t l, const Sketch& sketch) {
    const std::size_t p = model.width(), bsz = fw.batch(), s = sketch.size();
    const auto& basis = model.basis();
    const auto sens = output_sensitivities(model, fw, l);
    const Matrix feats = feature_batch(basis, fw.states[l - 1]);
    const double scale = 1.0 / std::sqrt(static_cast<double>(s));
    // w[a](i, j) = (S_i^T z_ij)_a with z_ij = S_i s_{j,0} prod_k <phi(h_ik), s_{j,k}>.
    std::vector<Matrix> w(p, Matrix(idx(bsz), idx(s)));
    for (std::size_t i = 0; i < bsz; ++i) {
        std::vector<Vector> phi(p);
        for (std::size_t k = 0; k < p; ++k) phi[k] = basis.eval(fw.states[l - 1](idx(i), idx(k)));
        for (std::size_t j = 0; j < s; ++j) {
            double c = scale;
            for (std::size_t k = 0; k < p; ++k) c *= phi[k].dot(sketch.factors[j][k + 1]);
            Vector z = c * (sens[i] * sketch.factors[j][0]);
            Vector wv = sens[i].transpose() * z;
            for (std::size_t a = 0; a < p; ++a) w[a](idx(i), idx(j)) = wv(idx(a));
        }
    }
    const auto nf = feats.cols();
    Matrix y(idx(p) * nf, idx(s));
    for (std::size_t a = 0; a < p; ++a) y.middleRows(idx(a) * nf, nf) = feats.transpose() * w[a] / static_cast<double>(bsz);
    return y;
}

GramData sketch_gram(const CTTModel& model, const BatchForward& fw, std::size_t l, const Sketch& sketch) {
    GramData g;
    g.kind = GramData::Kind::nystrom;
    g.layer = l;
    Matrix y = sketch_images(model, fw, l, sketch);
    Matrix s = sketch.dense();
    if (s.cols() <= s.rows()) {
        // Orthonormal sketch basis: G Q = (G S) R^{-1}, so the core keeps the conditioning of G.
        Eigen::HouseholderQR<Matrix> qr(s);
        const Matrix r = qr.matrixQR().topRows(s.cols()).triangularView<Eigen::Upper>();
        if ((r.diagonal().array().abs() > 1e-12 * r.diagonal().cwiseAbs().maxCoeff()).all()) {
            r.triangularView<Eigen::Upper>().solveInPlace<Eigen::OnTheRight>(y);
            s = qr.householderQ() * Matrix::Identity(s.rows(), s.cols());
        }
    }
    Matrix c = s.transpose() * y;
    c = 0.5 * (c + c.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(c);
    const double cmax = es.eigenvalues().size() ? es.eigenvalues().maxCoeff() : 0.0;
    std::vector<Index> keep;
    for (Index k = 0; k < es.eigenvalues().size(); ++k)
        if (cmax > 0.0 && es.eigenvalues()(k) > 1e-14 * cmax) keep.push_back(k);
    g.clipped = keep.size() < sketch.size();
    if (keep.empty()) {
        g.basis = Matrix(y.rows(), 0);
        g.eigenvalues = Vector(0);
        return g;
    }
    Matrix f(y.rows(), idx(keep.size()));
    for (std::size_t t = 0; t < keep.size(); ++t)
        f.col(idx(t)) = y * es.eigenvectors().col(keep[t]) / std::sqrt(es.eigenvalues()(keep[t]));
    Eigen::JacobiSVD<Matrix> svd(f, Eigen::ComputeThinU);
    g.basis = svd.matrixU();
    g.eigenvalues = svd.singularValues().array().square();
    return g;
}

namespace {

struct EigenSolve {
    Vector w;
    std::size_t kept = 0;
    double residual = 0.0;  // on the retained directions
    double dropped = 0.0;   // ||rhs outside the retained directions||
};

EigenSolve eigen_tikhonov(const Eigen::SelfAdjointEigenSolver<Matrix>& es, const Vector& rhs, double lambda) {
    const Vector& mu = es.eigenvalues();
    const double mmax = mu.size() ? mu.cwiseAbs().maxCoeff() : 0.0;
    const Vector c = es.eigenvectors().transpose() * rhs;
    Vector coef = Vector::Zero(c.size());
    EigenSolve out;
    double res = 0.0, drop = 0.0;
    for (Index k = 0; k < mu.size(); ++k) {
        if (mmax > 0.0 && mu(k) > 1e-14 * mmax) {
            coef(k) = c(k) / (mu(k) + lambda);
            const double r = (mu(k) + lambda) * coef(k) - c(k);
            res += r * r;
            ++out.kept;
        } else {
            drop += c(k) * c(k);
        }
    }
    out.w = es.eigenvectors() * coef;
    out.residual = std::sqrt(res);
    out.dropped = std::sqrt(drop);
    return out;
}

}  // namespace

Vector solve_gram(const GramData& g, const Vector& rhs, double lambda, SolveReport* report) {
    SolveReport rep;
    const double nr = rhs.norm();
    Vector w = Vector::Zero(rhs.size());
    if (nr == 0.0) {
        if (report) *report = rep;
        return w;
    }
    std::optional<Eigen::SelfAdjointEigenSolver<Matrix>> es;
    if (g.kind == GramData::Kind::dense) es.emplace(g.dense);
    double lam = lambda;
    for (int attempt = 0;; ++attempt) {
        if (g.kind == GramData::Kind::dense) {
            auto s = eigen_tikhonov(*es, rhs, lam);
            w = s.w;
            rep.kept = s.kept;
            rep.residual = s.residual / nr;
            rep.dropped = s.dropped / nr;
        } else {
            const Matrix& u = g.basis;
            Vector c = u.transpose() * rhs;
            Vector d = c.array() / (g.eigenvalues.array() + lam);
            w = u * d;
            rep.kept = static_cast<std::size_t>(u.cols());
            // Residual of the system restricted to span(U).
            Vector r = g.eigenvalues.cwiseProduct(d) + lam * d - c;
            rep.residual = r.norm() / nr;
            rep.dropped = std::sqrt(std::max(0.0, nr * nr - c.squaredNorm())) / nr;
        }
        rep.lambda = lam;
        rep.escalations = attempt;
        if (std::isfinite(rep.residual) && rep.residual <= 1e-6 && w.allFinite()) break;
        if (attempt == 3)
            throw NumericalError("Gram solve residual " + std::to_string(rep.residual) + " after raising lambda to " +
                                 std::to_string(lam));
        lam = lam > 0.0 ? 10.0 * lam : 1e-12 * std::max(1.0, g.dense.size() ? g.dense.norm() : 1.0);
    }
    if (report) *report = rep;
    return w;
}

GramDiagnostics spectrum_diagnostics(Vector spectrum) {
    GramDiagnostics d;
    std::sort(spectrum.data(), spectrum.data() + spectrum.size(), std::greater<>());
    spectrum = spectrum.cwiseMax(0.0);
    d.spectrum = spectrum;
    const double smax = spectrum.size() ? spectrum(0) : 0.0;
    if (smax <= 0.0) return d;
    Index k = 0;
    while (k < spectrum.size() && spectrum(k) > 1e-12 * smax) ++k;
    d.rank = static_cast<std::size_t>(k);
    d.kappa = smax / spectrum(k - 1);
    return d;
}

GramDiagnostics gram_diagnostics(const GramData& g) {
    if (g.kind == GramData::Kind::nystrom) return spectrum_diagnostics(g.eigenvalues);
    Eigen::SelfAdjointEigenSolver<Matrix> es(g.dense, Eigen::EigenvaluesOnly);
    return spectrum_diagnostics(es.eigenvalues());
}

CTTModel ngd_step(const CTTModel& model, const Dataset& batch, const TrainConfig& cfg, NgdState& state,
                  std::vector<LayerDiagnostics>* diag) {
    cfg.validate();
    const auto fw = forward_batch(model, batch.x, true, cfg.exec);
    const Vector r = flatten_rows(fw.output - batch.y);
    const std::size_t depth = model.depth();
    std::vector<Vector> dirs(depth);
    std::vector<LayerDiagnostics> dg(depth);
    if (cfg.sketch > 0 && cfg.freeze_sketch && state.frozen.empty()) {
        for (std::size_t l = 0; l < depth; ++l)
            state.frozen.push_back(draw_sketch(model.width(), model.basis().size(), cfg.sketch, state.rng));
    }
    for (std::size_t l = 1; l <= depth; ++l) {
        const Matrix j = parameter_jacobian_batch(model, fw, l, cfg.exec);
        const Vector g = gradient_from_jacobian(j, r, fw.batch(), cfg.exec);
        GramData gd;
        if (cfg.sketch == 0) {
            gd.layer = l;
            gd.dense = gram_from_jacobian(j, fw.batch(), cfg.exec);
        } else {
            const Sketch sk = cfg.freeze_sketch ? state.frozen[l - 1]
                                                : draw_sketch(model.width(), model.basis().size(), cfg.sketch, state.rng);
            gd = sketch_gram(model, fw, l, sk);
        }
        SolveReport sr;
        dirs[l - 1] = solve_gram(gd, g, cfg.lambda, &sr);
        const auto gdiag = gram_diagnostics(gd);
        dg[l - 1] = {gdiag.kappa, gdiag.rank, sr.residual, sr.lambda};
    }
    CTTModel out = model;
    for (std::size_t l = 0; l < depth; ++l) {
        DenseTensor coef = model.layer(l).to_dense();
        Vector v = flatten(coef) - cfg.alpha * dirs[l];
        out.layer(l) = apply_rank_policy(with_values(coef, v), cfg);
    }
    if (diag) *diag = std::move(dg);
    return out;
}

std::vector<Vector> loss_gradients(const CTTModel& model, const Dataset& batch, Exec exec) {
    const auto fw = forward_batch(model, batch.x, true, exec);
    const Vector r = flatten_rows(fw.output - batch.y);
    std::vector<Vector> g;
    for (std::size_t l = 1; l <= model.depth(); ++l)
        g.push_back(gradient_from_jacobian(parameter_jacobian_batch(model, fw, l, exec), r, fw.batch(), exec));
    return g;
}

CTTModel adam_step(const CTTModel& model, const Dataset& batch, const TrainConfig& cfg, AdamState& st) {
    const auto grads = loss_gradients(model, batch, cfg.exec);
    const std::size_t depth = model.depth();
    if (st.m.empty()) {
        for (const auto& g : grads) {
            st.m.push_back(Vector::Zero(g.size()));
            st.v.push_back(Vector::Zero(g.size()));
        }
    }
    ++st.t;
    const double t = static_cast<double>(st.t);
    const double c1 = 1.0 - std::pow(cfg.beta1, t), c2 = 1.0 - std::pow(cfg.beta2, t);
    CTTModel out = model;
    for (std::size_t l = 0; l < depth; ++l) {
        const Vector& g = grads[l];
        st.m[l] = cfg.beta1 * st.m[l] + (1.0 - cfg.beta1) * g;
        st.v[l] = cfg.beta2 * st.v[l] + (1.0 - cfg.beta2) * g.cwiseProduct(g);
        Vector mh = st.m[l] / c1;
        Vector vh = st.v[l] / c2;
        DenseTensor coef = model.layer(l).to_dense();
        Vector step = (mh.array() / (vh.array().sqrt() + cfg.adam_eps)).matrix();
        out.layer(l) = apply_rank_policy(with_values(coef, flatten(coef) - cfg.alpha * step), cfg);
    }
    return out;
}

void write_history_csv(std::ostream& os, const History& h) {
    os << "iteration,wall_time,train_loss,val_error";
    for (const char* name : {"kappa", "rank", "residual"})
        for (std::size_t l = 1; l <= h.depth; ++l) os << ',' << name << '_' << l;
    os << '\n';
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const auto& r : h.rows) {
        os << r.iteration << ',' << num(r.wall_time) << ',' << num(r.train_loss) << ',' << num(r.val_error);
        for (std::size_t l = 0; l < h.depth; ++l) os << ',' << (l < r.layers.size() ? num(r.layers[l].kappa) : "nan");
        for (std::size_t l = 0; l < h.depth; ++l)
            os << ',' << (l < r.layers.size() ? std::to_string(r.layers[l].rank) : std::string("nan"));
        for (std::size_t l = 0; l < h.depth; ++l)
            os << ',' << (l < r.layers.size() ? num(r.layers[l].residual) : "nan");
        os << '\n';
    }
}

TrainResult train(const CTTModel& model, const Dataset& train_set, const Dataset& val_set, const TrainConfig& cfg) {
    cfg.validate();
    using clock = std::chrono::steady_clock;
    TrainResult res{model, {model.depth(), {}}};
    NgdState ngd{std::mt19937_64(cfg.seed ^ 0x5bd1e995ULL), {}};
    AdamState adam;
    std::mt19937_64 batch_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    const auto start = clock::now();
    for (std::size_t it = 0; it <= cfg.iterations; ++it) {
        HistoryRow row;
        row.iteration = it;
        row.train_loss = loss_and_residual(res.model, train_set).loss;
        row.val_error = relative_error(res.model, val_set);
        if (it < cfg.iterations) {
            const Dataset batch = subsample(train_set, cfg.batch, batch_rng);
            switch (cfg.algorithm) {
                case Algorithm::ngd: res.model = ngd_step(res.model, batch, cfg, ngd, &row.layers); break;
                case Algorithm::adam: res.model = adam_step(res.model, batch, cfg, adam); break;
                case Algorithm::msa: res.model = msa_update(res.model, batch, cfg); break;
            }
        }
        row.wall_time = std::chrono::duration<double>(clock::now() - start).count();
        res.history.rows.push_back(std::move(row));
    }
    return res;
}

}  // namespace ctt
