// Acceptance run: one PASS/FAIL line per criterion. Exit status 1 if any fails.

#include "ctt/bench.hpp"
#include "ctt/compressor.hpp"
#include "ctt/encoders.hpp"
#include "ctt/tt.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace ctt;

namespace {

using Clock = std::chrono::steady_clock;
int failures = 0;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void report(const std::string& name, bool ok, const std::string& detail) {
    std::printf("%s %-22s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

void info(const std::string& name, const std::string& detail) {
    std::printf("INFO %-22s %s\n", name.c_str(), detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string tuple(const std::vector<std::size_t>& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s + ")";
}

DenseTensor gaussian_tensor(const Shape& s, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    std::vector<double> v(shape_size(s));
    for (auto& e : v) e = nd(rng);
    return DenseTensor(s, std::move(v));
}

double rel_diff(const DenseTensor& a, const DenseTensor& b) {
    DenseTensor d = b;
    d *= -1.0;
    d += a;
    return d.norm() / std::max(a.norm(), 1e-300);
}

Matrix uniform(std::size_t n, std::size_t d, double lo, double hi, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    return x;
}

Matrix random_spd(std::size_t d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto n = static_cast<Eigen::Index>(d);
    Matrix a = gaussian_tensor({d, d}, rng).as_matrix(1);
    return a * a.transpose() / static_cast<double>(n) + 0.5 * Matrix::Identity(n, n);
}

double max_error(const CTTModel& m, const Matrix& x, const std::function<Vector(const Vector&)>& ref) {
    double e = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        Vector xi = x.row(i).transpose();
        e = std::max(e, (m(xi) - ref(xi)).cwiseAbs().maxCoeff());
    }
    return e;
}

Dataset random_data(std::size_t b, std::size_t d, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Dataset s{Matrix(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(d)), Matrix(static_cast<Eigen::Index>(b), 1)};
    for (Eigen::Index i = 0; i < s.x.size(); ++i) s.x.data()[i] = u(rng);
    for (Eigen::Index i = 0; i < s.y.size(); ++i) s.y.data()[i] = u(rng);
    return s;
}

CTTModel random_model(std::size_t d, std::size_t depth, const FeatureBasis& b, std::uint64_t seed) {
    return CTTModel(b, Lift::identity(d), init_layers(d, b.size(), depth, 2.0, seed), Retraction::first_slots(1, d));
}

Vector flat(const DenseTensor& t) { return Eigen::Map<const Vector>(t.data(), static_cast<Eigen::Index>(t.size())); }

// 1/2 x^T G x over {1, x, x^2}^d.
DenseTensor quadratic_form_tensor(const Matrix& g) {
    const auto d = static_cast<std::size_t>(g.rows());
    DenseTensor t(Shape(d, 3));
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < d; ++i) {
        idx.assign(d, 0);
        idx[i] = 2;
        t(idx) += 0.5 * g(i, i);
        for (std::size_t j = i + 1; j < d; ++j) {
            idx.assign(d, 0);
            idx[i] = idx[j] = 1;
            t(idx) += g(i, j);
        }
    }
    return t;
}

void format_core() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> order(3, 4), mode(2, 4), rank(1, 3);
    double worst[3] = {0, 0, 0}, round_err = 0.0, cp_err = 0.0;
    const double eps[3] = {1e-2, 1e-6, 1e-10};
    bool ok = true;
    for (int trial = 0; trial < 500; ++trial) {
        Shape s(static_cast<std::size_t>(order(rng)));
        for (auto& n : s) n = static_cast<std::size_t>(mode(rng));
        DenseTensor t = gaussian_tensor(s, rng);
        for (int e = 0; e < 3; ++e) {
            const double r = rel_diff(t, reconstruct(tt_svd(t, TruncationPolicy::relative(eps[e]))));
            worst[e] = std::max(worst[e], r / eps[e]);
            ok = ok && r <= eps[e];
        }
        auto a = tt_svd(t, TruncationPolicy::exact());
        round_err = std::max(round_err, rel_diff(reconstruct(a), reconstruct(tt_round(a, TruncationPolicy::max_ranks(a.internal_ranks())))));
        CPTensor c;
        const auto r = static_cast<std::size_t>(rank(rng));
        for (auto n : s) c.factors.push_back(gaussian_tensor({n, r}, rng).as_matrix(1));
        cp_err = std::max(cp_err, rel_diff(cp_reconstruct(c), reconstruct(cp_to_tt(c))));
    }
    const double secs = seconds_since(t0);
    ok = ok && round_err <= 1e-12 && cp_err <= 1e-12 && secs < 60.0;
    report("format-core", ok,
           fmt("500 tensors, max err/eps %.3g %.3g %.3g; round no-op %.2e, cp->tt %.2e; %.1fs", worst[0], worst[1],
               worst[2], round_err, cp_err, secs));
}

void encoder_exactness() {
    bool ok = true;
    std::ostringstream os;
    auto check = [&](const char* name, double err, bool ranks, bool layers) {
        ok = ok && err <= 1e-9 && ranks && layers;
        os << name << ' ' << fmt("%.1e", err) << (ranks ? "" : " RANK") << (layers ? "" : " LAYERS") << "; ";
    };

    const auto aff = FeatureBasis::affine();
    {
        Matrix a = uniform(4, 4, -1, 1, 1);
        Vector b = uniform(4, 1, -1, 1, 2).col(0);
        auto layer = encode_affine(aff, a, b);
        CTTModel m(aff, Lift::identity(4), {layer}, Retraction::first_slots(4, 4));
        bool r = true;
        for (auto v : layer.tt_ranks()) r = r && v <= 4;
        check("affine", max_error(m, uniform(500, 4, -1, 1, 3), [&](const Vector& x) -> Vector { return a * x + b; }),
              r, true);
    }
    {
        const std::vector<double> c{0.5, -1.0, 0.25, 2.0, -0.75};
        auto m = encode_univariate_poly(aff, c);
        check("horner", max_error(m, uniform(500, 1, -1, 1, 4), [&](const Vector& x) {
                  double s = 0.0;
                  for (std::size_t k = c.size(); k-- > 0;) s = s * x(0) + c[k];
                  return Vector::Constant(1, s);
              }), true, m.depth() == c.size());
    }
    {
        SparsePolynomial f{3, {{2, 1, 0}, {0, 0, 4}, {0, 0, 0}, {5, 0, 3}}, {3.0, -1.0, 2.0, 0.25}};
        auto enc = encode_sparse_poly(aff, f, 2);
        std::size_t worst = 0;
        for (const auto& l : enc.model.layers())
            for (auto v : l.tt_ranks()) worst = std::max(worst, v);
        check("sparse-poly", max_error(enc.model, uniform(500, 3, -1, 1, 5),
                                       [&](const Vector& x) -> Vector { return Vector::Constant(1, f(x)); }),
              worst <= 2, enc.layer_count <= enc.layer_bound && enc.layer_count <= sparse_poly_layer_bound(f, 2));
        os << "(sparse max internal rank " << worst << ", layers " << enc.layer_count << "/" << enc.layer_bound << "); ";
    }
    {
        Matrix a = uniform(2, 2, -1, 1, 6);
        Vector b = uniform(2, 1, -1, 1, 7).col(0);
        CTTModel f(aff, Lift::identity(2), {encode_affine(aff, a, b)}, Retraction::first_slots(2, 2));
        auto g0 = encode_univariate_poly(aff, {1.0, 0.0, -2.0, 1.0});
        Matrix gm = Matrix::Zero(2, 2);
        gm(1, 0) = 1.0;
        CTTModel g(aff, Lift::custom(gm, Vector::Zero(2)), g0.layers(), g0.retraction());
        auto h = concat_ct(f, g);
        check("concat", max_error(h, uniform(500, 2, -1, 1, 8), [&](const Vector& x) -> Vector {
                  Vector y(3);
                  y.head(2) = a * x + b;
                  y(2) = 1.0 - 2.0 * x(0) * x(0) + x(0) * x(0) * x(0);
                  return y;
              }), true, h.depth() == std::max(f.depth(), g.depth()));
    }
    {
        auto v = vectorize_activation(encode_poly_activation(aff, {0.0, 0.0, 1.0}), 3);
        check("vectorize",
              max_error(v, uniform(500, 3, -2, 2, 9), [](const Vector& x) -> Vector { return x.array().square(); }),
              true, true);
    }
    {
        std::mt19937_64 rng(10);
        DNNSpec spec;
        for (auto [o, i] : std::vector<std::pair<std::size_t, std::size_t>>{{5, 3}, {4, 5}, {2, 4}}) {
            spec.weights.push_back(gaussian_tensor({o, i}, rng).as_matrix(1));
            spec.biases.push_back(gaussian_tensor({o, 1}, rng).as_matrix(1).col(0));
        }
        auto enc = encode_dnn(FeatureBasis::relu_abs(), spec);
        bool r = true;
        for (std::size_t l = 0; l < enc.model.depth(); ++l)
            if (enc.affine_layer[l])
                for (auto v : enc.model.layer(l).tt_ranks()) r = r && v <= spec.max_width();
        check("relu-dnn", max_error(enc.model, uniform(500, 3, -2, 2, 11), [&](const Vector& x) { return spec(x); }), r,
              enc.model.depth() <= enc.layer_bound && enc.layer_bound == 2 * spec.weights.size() - 1);
    }
    report("encoder-exactness", ok, os.str());
}

void gaussian_flow() {
    bool ok = true;
    std::ostringstream os;
    for (std::size_t d : {2u, 3u}) {
        Matrix g = random_spd(d, 20 + d);
        Matrix x = uniform(500, d, -1, 1, 30 + d);
        double e[3];
        const std::size_t steps[3] = {32, 64, 128};
        for (int k = 0; k < 3; ++k)
            e[k] = max_error(build_gaussian_flow(g, steps[k]), x, [&](const Vector& v) -> Vector {
                return Vector::Constant(1, std::exp(-0.5 * v.dot(g * v)));
            });
        const double r1 = e[0] / e[1], r2 = e[1] / e[2];
        auto ranks = tt_svd(quadratic_form_tensor(g), TruncationPolicy::exact()).internal_ranks();
        const std::size_t bound = (d + 1) / 2 + 1;
        bool rank_ok = true;
        for (auto r : ranks) rank_ok = rank_ok && r <= bound;
        ok = ok && r1 >= 1.7 && r1 <= 2.3 && r2 >= 1.7 && r2 <= 2.3 && rank_ok;
        os << "d=" << d << fmt(" ratios %.3f %.3f", r1, r2) << " ranks " << tuple(ranks) << " bound " << bound << "; ";
    }
    report("gaussian-flow", ok, os.str());
}

void markov_ranks() {
    const std::vector<std::size_t> m{2, 2, 2};
    auto pred = predicted_permuted_markov_ranks(m, 4);
    auto measure = [&](std::size_t grid) {
        auto t = permute_modes(markov_density(m, grid, 40), markov_permutation(4));
        return tt_svd(t, TruncationPolicy::relative(1e-12)).internal_ranks();
    };
    auto got = measure(3);
    report("markov-ranks", got == pred, "grid 3: measured " + tuple(got) + " predicted " + tuple(pred));
    info("markov-ranks", "grid 4: measured " + tuple(measure(4)) + " predicted " + tuple(pred));
}

void msa_gd_identity() {
    std::mt19937_64 rng(50);
    std::uniform_int_distribution<int> dd(2, 3), ll(1, 3), bb(5, 40);
    std::uniform_real_distribution<double> rr(0.2, 3.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto d = static_cast<std::size_t>(dd(rng)), depth = static_cast<std::size_t>(ll(rng));
        const auto b = static_cast<std::size_t>(bb(rng));
        auto model = random_model(d, depth, trial % 2 ? FeatureBasis::affine() : FeatureBasis::quadratic(), 500 + trial);
        auto data = random_data(b, d, rng);
        TrainConfig cfg;
        cfg.algorithm = Algorithm::msa;
        cfg.msa_reg = MsaRegularization::frobenius;
        cfg.R = rr(rng);
        cfg.gamma = 0.0;
        auto next = msa_update(model, data, cfg);
        auto fw = forward_batch(model, data.x, true);
        Vector r = flatten_rows(fw.output - data.y);
        for (std::size_t l = 1; l <= depth; ++l) {
            Vector expect = -(2.0 / (cfg.R * static_cast<double>(b))) * parameter_jacobian_batch(model, fw, l).transpose() * r;
            worst = std::max(worst, (flat(next.layer(l - 1).to_dense()) - expect).norm() / std::max(1.0, expect.norm()));
        }
    }
    report("msa-gd-identity", worst <= 1e-8, fmt("20 configs, max rel diff %.2e", worst));
}

void ngd_correctness() {
    std::mt19937_64 rng(60);
    double gn = 0.0, fd_err = 0.0, ny = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        auto model = random_model(3, 1, FeatureBasis::quadratic(), 600 + trial);
        auto data = random_data(100, 3, rng);
        TrainConfig cfg;
        cfg.alpha = 1.0;
        cfg.lambda = 0.0;
        NgdState st{std::mt19937_64(1), {}};
        auto next = ngd_step(model, data, cfg, st);
        auto fw = forward_batch(next, data.x, true);
        gn = std::max(gn, gradient_from_jacobian(parameter_jacobian_batch(next, fw, 1), flatten_rows(fw.output - data.y), 100).norm());
    }
    for (int trial = 0; trial < 5; ++trial) {
        auto model = random_model(2, 2, FeatureBasis::quadratic(), 610 + trial);
        auto data = random_data(6, 2, rng);
        auto fw = forward_batch(model, data.x, true);
        for (std::size_t l = 1; l <= 2; ++l) {
            Matrix j = parameter_jacobian_batch(model, fw, l);
            DenseTensor c = model.layer(l - 1).to_dense();
            Matrix fd(j.rows(), j.cols());
            const double h = 1e-5;
            for (std::size_t q = 0; q < c.size(); ++q) {
                CTTModel up = model, dn = model;
                DenseTensor cu = c, cd = c;
                cu.data()[q] += h;
                cd.data()[q] -= h;
                up.layer(l - 1) = CTTLayer(cu);
                dn.layer(l - 1) = CTTLayer(cd);
                fd.col(static_cast<Eigen::Index>(q)) =
                    flatten_rows(forward_batch(up, data.x, false).output - forward_batch(dn, data.x, false).output) / (2 * h);
            }
            fd_err = std::max(fd_err, (j - fd).norm() / j.norm());
        }
    }
    std::mt19937_64 srng(4);
    for (int trial = 0; trial < 5; ++trial) {
        auto model = random_model(2, 2, FeatureBasis::affine(), 620 + trial);
        auto data = random_data(32, 2, rng);
        auto fw = forward_batch(model, data.x, true);
        Vector r = flatten_rows(fw.output - data.y);
        for (std::size_t l = 1; l <= 2; ++l) {
            Vector g = gradient_from_jacobian(parameter_jacobian_batch(model, fw, l), r, 32);
            Vector a = solve_gram(assemble_gram(model, fw, l), g, 1e-3);
            Vector b = solve_gram(sketch_gram(model, fw, l, draw_sketch(2, 2, 8, srng)), g, 1e-3);
            ny = std::max(ny, (a - b).norm() / a.norm());
        }
    }
    report("ngd-correctness", gn <= 1e-8 && fd_err <= 1e-4 && ny <= 1e-6,
           fmt("Gauss-Newton grad %.2e, jacobian fd %.2e, full sketch %.2e", gn, fd_err, ny));
}

std::vector<History> recovery() {
    const auto t0 = Clock::now();
    std::vector<History> runs;
    std::size_t reached = 0, beat = 0;
    std::ostringstream missed;
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        auto cfg = recovery_preset(4);
        cfg.seed = seed;
        cfg.train.iterations = 300;
        auto ngd = run_experiment(cfg);
        double best = INFINITY;
        for (const auto& row : ngd.history.rows) best = std::min(best, row.val_error);
        if (best < 1e-3) ++reached;
        else missed << ' ' << seed << fmt("(%.1e)", best);

        auto acfg = recovery_preset(4, Algorithm::adam);
        acfg.seed = seed;
        acfg.train.iterations = 200;
        auto adam = run_experiment(acfg);
        if (ngd.history.rows.at(200).val_error < adam.history.rows.at(200).val_error) ++beat;
        runs.push_back(std::move(ngd.history));
    }
    const double secs = seconds_since(t0);
    report("recovery-d4", reached >= 20 && beat >= 20 && secs < 600.0,
           fmt("NGD < 1e-3 on %zu/25 seeds, below Adam at 200 on %zu/25; %.0fs", reached, beat, secs) +
               (missed.str().empty() ? "" : "; missed" + missed.str()));
    return runs;
}

void rank_sweep_check() {
    const auto t0 = Clock::now();
    auto rows = rank_sweep(RankSweepOptions{});
    std::vector<double> r, m;
    std::ostringstream os;
    for (const auto& row : rows) {
        r.push_back(static_cast<double>(row.rank));
        m.push_back(row.mean);
        os << fmt("%zu:%.3g ", row.rank, row.mean);
    }
    const double rho = spearman(r, m);
    const bool ok = rows.front().mean >= 0.6 && rows.front().mean <= 1.0 && rows.back().mean <= 1e-2 && rho < -0.9;
    report("rank-sweep", ok, os.str() + fmt("rho %.3f; %.0fs", rho, seconds_since(t0)));
}

void sketch_sweep_check() {
    const auto t0 = Clock::now();
    SketchSweepOptions o;
    o.sizes = {20, 30, 40};
    auto res = sketch_sweep(o);
    bool reached[3];
    std::ostringstream os;
    for (std::size_t k = 0; k < 3; ++k) {
        std::vector<double> best;
        for (const auto& h : res.histories[k]) {
            double b = INFINITY;
            for (const auto& row : h.rows) b = std::min(b, row.val_error);
            best.push_back(b);
        }
        const double med = median(best);
        reached[k] = med < o.threshold;
        os << fmt("s=%zu (%.2g,%.0e) median best %.3g final %.3g; ", res.rows[k].size, res.rows[k].alpha,
                  res.rows[k].lambda, med, res.rows[k].median);
    }
    report("sketch-sweep", !reached[0] && reached[1] && reached[2], os.str() + fmt("%.0fs", seconds_since(t0)));
}

void condition_check(const std::vector<History>& runs) {
    auto rows = condition_trace(runs);
    const std::size_t depth = runs.front().depth;
    double peak = 0.0, top = 0.0;
    for (const auto& row : rows)
        for (std::size_t l = 0; l < depth; ++l) peak = std::max(peak, row.kappa_median[l]);
    for (const auto& h : runs)
        for (const auto& row : h.rows)
            for (const auto& ld : row.layers) top = std::max(top, ld.kappa);
    bool ranks_ok = true;
    std::ostringstream os;
    for (std::size_t l = 0; l < depth; ++l) {
        const double r10 = rows.at(10).rank_median[l], r100 = rows.at(100).rank_median[l];
        ranks_ok = ranks_ok && r100 <= r10;
        os << fmt("layer %zu rank %g -> %g; ", l + 1, r10, r100);
    }
    report("condition-trace", peak > 1e6 && top < 1e15 && ranks_ok,
           fmt("median kappa peak %.2e, max over runs %.2e; ", peak, top) + os.str());
}

void compression() {
    auto m = build_gaussian_flow(random_spd(4, 70), 16);
    Matrix stats = uniform(2000, 4, -1, 1, 71);
    Matrix fresh = uniform(10000, 4, -1, 1, 72);
    bool ok = true;
    std::ostringstream os;
    for (double eps : {1e-1, 1e-2}) {
        auto first = compress(m, eps, stats);
        double num = 0.0, den = 0.0;
        for (Eigen::Index i = 0; i < fresh.rows(); ++i) {
            Vector x = fresh.row(i).transpose();
            Vector g = m(x);
            num += (first.model(x) - g).squaredNorm();
            den += g.squaredNorm();
        }
        const double err = std::sqrt(num / den);
        auto second = compress(first.model, eps, stats);
        bool idem = true;
        std::size_t p0 = 0, p1 = 0;
        for (std::size_t l = 0; l < m.depth(); ++l) {
            idem = idem && second.report.layers[l].new_ranks == first.report.layers[l].new_ranks;
            p0 += first.report.layers[l].old_params;
            p1 += first.report.layers[l].new_params;
        }
        ok = ok && err <= 1.5 * eps && idem;
        os << fmt("eps %.0e: error %.3e, params %zu -> %zu, idempotent %s; ", eps, err, p0, p1, idem ? "yes" : "no");
    }
    report("compression", ok, os.str());
}

}  // namespace

int main() {
    const auto t0 = Clock::now();
    format_core();
    encoder_exactness();
    gaussian_flow();
    markov_ranks();
    msa_gd_identity();
    ngd_correctness();
    auto runs = recovery();
    rank_sweep_check();
    sketch_sweep_check();
    condition_check(runs);
    compression();
    std::printf("%d failed, %.0fs total\n", failures, seconds_since(t0));
    return failures ? 1 : 0;
}
