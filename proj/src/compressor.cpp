#include "ctt/compressor.hpp"

#include "ctt/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace ctt {

namespace {

using Index = Eigen::Index;

double spectral_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

struct Pass {
    std::vector<std::vector<Vector>> states;  // [i][k], k = 0..L
    std::vector<Vector> outputs;
};

Pass run(const CTTModel& model, const Matrix& x) {
    Pass p;
    for (Index i = 0; i < x.rows(); ++i) {
        auto t = forward(model, x.row(i).transpose());
        p.states.push_back(std::move(t.states));
        p.outputs.push_back(std::move(t.output));
    }
    return p;
}

void lipschitz(const CTTLayer& layer, const FeatureBasis& basis, const Pass& pass, std::size_t k, double& lip_psi,
               double& lip_flow) {
    lip_psi = 0.0;
    lip_flow = 0.0;
    for (const auto& s : pass.states) {
        Matrix j = layer_jacobian(layer, basis, s[k]);
        lip_psi = std::max(lip_psi, spectral_norm(j));
        j.diagonal().array() += 1.0;
        lip_flow = std::max(lip_flow, spectral_norm(j));
    }
}

std::string join(const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
    return s;
}

}  // namespace

LayerStats estimate_layer_stats(const CTTModel& model, const Matrix& samples, std::size_t min_samples) {
    require(samples.rows() > 0, "empty sample set");
    require(static_cast<std::size_t>(samples.rows()) >= min_samples,
            "need at least " + std::to_string(min_samples) + " samples");
    require(static_cast<std::size_t>(samples.cols()) == model.input_dim(), "sample dimension mismatch");
    const auto pass = run(model, samples);
    const std::size_t depth = model.depth();
    const double b = static_cast<double>(samples.rows());
    LayerStats st;
    st.samples = static_cast<std::size_t>(samples.rows());
    double ms = 0.0, mo = 0.0;
    for (std::size_t i = 0; i < pass.states.size(); ++i) {
        ms += pass.states[i].back().squaredNorm();
        mo += pass.outputs[i].squaredNorm();
    }
    st.M_state = std::sqrt(ms / b);
    st.M_output = std::sqrt(mo / b);
    for (std::size_t k = 0; k < depth; ++k) {
        double phi = 0.0;
        for (const auto& s : pass.states) phi += feature_tensor(model.basis(), s[k]).squaredNorm();
        st.phi_norm.push_back(std::sqrt(phi / b));
        double lp, lf;
        lipschitz(model.layer(k), model.basis(), pass, k, lp, lf);
        st.lip_psi.push_back(lp);
        st.lip_flow.push_back(lf);
    }
    return st;
}

TTTensor truncate_to_tolerance(const TTTensor& a, double delta) {
    require(delta >= 0.0, "tolerance must be non-negative");
    TTTensor t = right_orthogonalize(a);
    const std::size_t d = t.order();
    if (d < 2) return t;
    const Shape n = t.mode_sizes();
    auto& cores = t.cores();
    double left = static_cast<double>(t.output_rank());
    for (std::size_t k = 0; k + 1 < d; ++k) {
        left *= static_cast<double>(n[k]);
        double right = 1.0;
        for (std::size_t j = k + 1; j < d; ++j) right *= static_cast<double>(n[j]);
        const double m = std::min(left, right);
        const double theta = delta / std::sqrt(static_cast<double>(d - 1) * m);
        const DenseTensor& c = cores[k];
        const std::size_t r0 = c.dim(0), nk = c.dim(1);
        auto svd = full_svd(c.as_matrix(2));
        const auto smax = svd.sigma.size() ? svd.sigma(0) : 0.0;
        Index keep = 1;
        while (keep < svd.sigma.size() && svd.sigma(keep) >= theta && svd.sigma(keep) > k_rank_threshold * smax) ++keep;
        DenseTensor u({r0, nk, static_cast<std::size_t>(keep)});
        u.as_matrix(2) = svd.U.leftCols(keep);
        Matrix sv = svd.sigma.head(keep).asDiagonal() * svd.V.leftCols(keep).transpose();
        const DenseTensor& nxt = cores[k + 1];
        DenseTensor merged({static_cast<std::size_t>(keep), nxt.dim(1), nxt.dim(2)});
        merged.as_matrix(1) = sv * nxt.as_matrix(1);
        cores[k] = std::move(u);
        cores[k + 1] = std::move(merged);
    }
    return TTTensor(std::move(cores));
}

CompressionResult compress(const CTTModel& model, double eps, const Matrix& samples, std::size_t min_samples) {
    require(eps > 0.0, "compression tolerance must be positive");
    const auto stats = estimate_layer_stats(model, samples, min_samples);
    const std::size_t depth = model.depth();
    const auto pass = run(model, samples);
    CompressionResult res{model, {}};
    auto& rep = res.report;
    rep.eps = eps;
    rep.samples = stats.samples;
    rep.M_state = stats.M_state;
    rep.M_output = stats.M_output;
    rep.layers.resize(depth);
    double lip_prod = 1.0;  // prod_{k>j} Lip(I + psi~_k)
    std::vector<double> tail_prod(depth, 1.0);
    for (std::size_t j = depth; j-- > 0;) {
        auto& lr = rep.layers[j];
        lr.layer = j + 1;
        lr.phi_norm = stats.phi_norm[j];
        const CTTLayer& old = model.layer(j);
        const TTTensor exact = tt_round(old.to_tt(), TruncationPolicy::exact());
        lr.old_ranks = exact.internal_ranks();
        lr.old_params = old.parameter_count();
        tail_prod[j] = lip_prod;
        double delta = eps * stats.M_output / (static_cast<double>(depth) * lr.phi_norm) / lip_prod;
        if (!std::isfinite(delta) || delta <= 0.0 || !std::isfinite(lip_prod)) {
            lr.delta = 0.0;
            lr.copied = true;
            rep.warnings.push_back("layer " + std::to_string(j + 1) + ": zero budget, copied unchanged");
        } else {
            lr.delta = delta;
            TTTensor next = truncate_to_tolerance(exact, delta);
            if (next.internal_ranks() == lr.old_ranks) {
                lr.copied = true;
            } else {
                lr.achieved = tt_norm(tt_add_scale(exact, next, 1.0, -1.0));
                res.model.layer(j) = CTTLayer(std::move(next));
            }
        }
        lr.new_ranks = lr.copied ? lr.old_ranks : res.model.layer(j).tt_ranks();
        lr.new_params = res.model.layer(j).parameter_count();
        lipschitz(res.model.layer(j), model.basis(), pass, j, lr.lip_psi, lr.lip_flow);
        lip_prod *= lr.lip_flow;
    }
    for (std::size_t j = 0; j < depth; ++j) rep.bound += rep.layers[j].achieved * rep.layers[j].phi_norm * tail_prod[j];
    double num = 0.0, den = 0.0;
    for (Index i = 0; i < samples.rows(); ++i) {
        Vector g = pass.outputs[static_cast<std::size_t>(i)];
        num += (res.model(samples.row(i).transpose()) - g).squaredNorm();
        den += g.squaredNorm();
    }
    rep.measured_error = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
    return res;
}

void write_compression_csv(std::ostream& os, const CompressionReport& r) {
    os << "layer,delta,achieved,phi_norm,lip_psi,lip_flow,old_ranks,new_ranks,old_params,new_params,copied\n";
    os.precision(17);
    for (const auto& l : r.layers)
        os << l.layer << ',' << l.delta << ',' << l.achieved << ',' << l.phi_norm << ',' << l.lip_psi << ','
           << l.lip_flow << ',' << join(l.old_ranks) << ',' << join(l.new_ranks) << ',' << l.old_params << ','
           << l.new_params << ',' << (l.copied ? 1 : 0) << '\n';
}

void write_compression_json(std::ostream& os, const CompressionReport& r) {
    nlohmann::json j;
    j["eps"] = r.eps;
    j["samples"] = r.samples;
    j["M_state"] = r.M_state;
    j["M_output"] = r.M_output;
    j["bound"] = r.bound;
    j["measured_error"] = r.measured_error;
    j["warnings"] = r.warnings;
    j["layers"] = nlohmann::json::array();
    for (const auto& l : r.layers)
        j["layers"].push_back({{"layer", l.layer},
                               {"delta", l.delta},
                               {"achieved", l.achieved},
                               {"phi_norm", l.phi_norm},
                               {"lip_psi", l.lip_psi},
                               {"lip_flow", l.lip_flow},
                               {"old_ranks", l.old_ranks},
                               {"new_ranks", l.new_ranks},
                               {"old_params", l.old_params},
                               {"new_params", l.new_params},
                               {"copied", l.copied}});
    os << j.dump(2) << '\n';
}

}  // namespace ctt
