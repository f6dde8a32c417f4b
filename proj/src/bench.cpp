#include "ctt/bench.hpp"

#include "ctt/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>

namespace ctt {

namespace {

using Index = Eigen::Index;
using nlohmann::json;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join(const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
    return s;
}

Dataset sample(std::size_t d, std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Dataset s{Matrix(static_cast<Index>(n), static_cast<Index>(d)), Matrix(static_cast<Index>(n), 1)};
    for (Index i = 0; i < s.x.rows(); ++i) {
        for (Index k = 0; k < s.x.cols(); ++k) s.x(i, k) = u(rng);
        s.y(i, 0) = recovery_target(s.x.row(i).transpose());
    }
    return s;
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    return os;
}

}  // namespace

double recovery_target(const Vector& x) {
    const auto d = static_cast<std::size_t>(x.size());
    require(d >= 2, "recovery target needs d >= 2");
    const std::size_t m = d / 2;
    const double y = d % 2 == 0 ? 1.0 : x(static_cast<Index>(d - 1));
    double out = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double t = x(static_cast<Index>(i)) * y - x(static_cast<Index>(m + i));
        out *= t * t;
    }
    return out;
}

RecoveryData gen_recovery_dataset(std::size_t d, std::size_t n_train, std::size_t n_val, std::uint64_t seed) {
    require(d >= 2, "recovery dataset needs d >= 2");
    std::seed_seq st{seed, std::uint64_t{0}}, sv{seed, std::uint64_t{1}};
    std::mt19937_64 rt(st), rv(sv);
    return {sample(d, n_train, rt), sample(d, n_val, rv)};
}

void ExperimentConfig::validate() const {
    require(problem == "recovery", "unknown problem '" + problem + "'");
    require(n_train > 0 && n_val > 0, "sample counts must be positive");
    require(d >= 2, "recovery needs d >= 2");
    require(depth >= 1, "need at least one layer");
    require(width == 0 || width >= d, "width must be at least d");
    (void)FeatureBasis::from_name(basis);
    train.validate();
}

ExperimentConfig recovery_preset(std::size_t d, Algorithm a) {
    ExperimentConfig c;
    c.d = d;
    c.train.algorithm = a;
    if (a == Algorithm::adam) {
        c.train.alpha = 1e-3;
    } else if (d == 5) {
        c.train.alpha = 0.5;
        c.train.lambda = 1e-11;
    } else {
        c.train.alpha = 0.7;
        c.train.lambda = 1e-12;
    }
    return c;
}

void apply_sketch_preset(TrainConfig& cfg, std::size_t s) {
    cfg.sketch = s;
    switch (s) {
        case 20: cfg.alpha = 0.85, cfg.lambda = 1e-11; break;
        case 30: cfg.alpha = 0.8, cfg.lambda = 1e-12; break;
        default: cfg.alpha = 0.7, cfg.lambda = 1e-12; break;
    }
}

ExperimentConfig config_from_json(const std::string& text) {
    const json j = json::parse(text);
    ExperimentConfig c;
    if (j.contains("d")) c = recovery_preset(j["d"].get<std::size_t>(),
                                             algorithm_from_name(j.value("algorithm", std::string("ngd"))));
    else if (j.contains("algorithm")) c = recovery_preset(4, algorithm_from_name(j["algorithm"].get<std::string>()));
    c.problem = j.value("problem", c.problem);
    c.n_train = j.value("n_train", c.n_train);
    c.n_val = j.value("n_val", c.n_val);
    c.basis = j.value("basis", c.basis);
    c.width = j.value("width", c.width);
    c.depth = j.value("depth", c.depth);
    c.init_scale = j.value("init_scale", c.init_scale);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.seed = j.value("seed", c.seed);
    auto& t = c.train;
    t.R = j.value("R", t.R);
    t.gamma = j.value("gamma", t.gamma);
    if (j.contains("msa_regularization"))
        t.msa_reg = j["msa_regularization"] == "frobenius" ? MsaRegularization::frobenius : MsaRegularization::natural;
    if (j.contains("msa_solver")) t.msa_solver = j["msa_solver"] == "als" ? MsaSolver::als : MsaSolver::dense;
    t.batch = j.value("batch", t.batch);
    if (j.contains("sketch")) apply_sketch_preset(t, j["sketch"].get<std::size_t>());
    t.alpha = j.value("alpha", t.alpha);
    t.lambda = j.value("lambda", t.lambda);
    t.freeze_sketch = j.value("freeze_sketch", t.freeze_sketch);
    t.iterations = j.value("iterations", t.iterations);
    t.tt_ranks = j.value("tt_ranks", t.tt_ranks);
    t.beta1 = j.value("beta1", t.beta1);
    t.beta2 = j.value("beta2", t.beta2);
    t.adam_eps = j.value("adam_eps", t.adam_eps);
    if (j.contains("exec")) t.exec = j["exec"] == "serial" ? Exec::serial : Exec::parallel;
    t.seed = c.seed;
    c.validate();
    return c;
}

std::string config_to_json(const ExperimentConfig& c) {
    const auto& t = c.train;
    json j{{"problem", c.problem},
           {"d", c.d},
           {"n_train", c.n_train},
           {"n_val", c.n_val},
           {"basis", c.basis},
           {"width", c.width},
           {"depth", c.depth},
           {"init_scale", c.init_scale},
           {"out_dir", c.out_dir},
           {"seed", c.seed},
           {"algorithm", algorithm_name(t.algorithm)},
           {"alpha", t.alpha},
           {"lambda", t.lambda},
           {"R", t.R},
           {"gamma", t.gamma},
           {"msa_regularization", t.msa_reg == MsaRegularization::frobenius ? "frobenius" : "natural"},
           {"msa_solver", t.msa_solver == MsaSolver::als ? "als" : "dense"},
           {"batch", t.batch},
           {"sketch", t.sketch},
           {"freeze_sketch", t.freeze_sketch},
           {"iterations", t.iterations},
           {"tt_ranks", t.tt_ranks},
           {"beta1", t.beta1},
           {"beta2", t.beta2},
           {"adam_eps", t.adam_eps},
           {"exec", t.exec == Exec::serial ? "serial" : "parallel"}};
    return j.dump(2);
}

CTTModel make_recovery_model(const ExperimentConfig& cfg) {
    const std::size_t p = cfg.width ? cfg.width : cfg.d;
    const auto basis = FeatureBasis::from_name(cfg.basis);
    const Lift lift = p == cfg.d ? Lift::identity(cfg.d) : Lift::zero_pad(cfg.d, p);
    return CTTModel(basis, lift, init_layers(p, basis.size(), cfg.depth, cfg.init_scale, cfg.seed),
                    Retraction::first_slots(1, p));
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto data = gen_recovery_dataset(cfg.d, cfg.n_train, cfg.n_val, cfg.seed);
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    auto tr = train(make_recovery_model(cfg), data.train, data.val, tc);
    ExperimentResult r{std::move(tr.model), std::move(tr.history), 0.0, 0.0, tc.iterations};
    r.final_error = r.history.rows.back().val_error;
    r.wall_time = r.history.rows.back().wall_time;
    if (!cfg.out_dir.empty()) {
        const std::filesystem::path dir(cfg.out_dir);
        std::filesystem::create_directories(dir);
        auto h = open_out(dir / "history.csv");
        write_history_csv(h, r.history);
        save_model(dir / "model.ctt", r.model);
        auto s = open_out(dir / "summary.csv");
        write_summary_csv(s, cfg, r);
    }
    return r;
}

std::vector<RankSweepRow> rank_sweep(const RankSweepOptions& opt) {
    const auto basis = FeatureBasis::from_name(opt.basis);
    const Shape modes(opt.d, basis.size());
    std::vector<RankSweepRow> rows;
    for (auto rk : opt.ranks) {
        RankSweepRow row;
        row.rank = rk;
        row.ranks = feasible_ranks(modes, {rk});
        for (std::size_t s = 0; s < opt.repeats; ++s) {
            const auto data = gen_recovery_dataset(opt.d, opt.n_train, opt.n_val, s);
            const Vector y = data.train.y.col(0), yv = data.val.y.col(0);
            RegressionReport rep;
            (void)tt_regression(data.train.x, y, basis, {{rk}, opt.sweeps, 1e-12, s}, &rep, &data.val.x, &yv);
            row.parameters = rep.parameters;
            row.errors.push_back(rep.validation_error);
        }
        const double n = static_cast<double>(row.errors.size());
        row.mean = std::accumulate(row.errors.begin(), row.errors.end(), 0.0) / n;
        double v = 0.0;
        for (double e : row.errors) v += (e - row.mean) * (e - row.mean);
        row.stddev = n > 1 ? std::sqrt(v / (n - 1)) : 0.0;
        row.min = *std::min_element(row.errors.begin(), row.errors.end());
        row.max = *std::max_element(row.errors.begin(), row.errors.end());
        rows.push_back(std::move(row));
    }
    return rows;
}

SketchSweepResult sketch_sweep(const SketchSweepOptions& opt) {
    SketchSweepResult res;
    for (auto s : opt.sizes) {
        SketchSweepRow row;
        row.size = s;
        std::vector<History> hs;
        for (std::size_t seed = 0; seed < opt.repeats; ++seed) {
            auto cfg = recovery_preset(4);
            cfg.seed = seed;
            cfg.train.iterations = opt.iterations;
            if (s > 0) apply_sketch_preset(cfg.train, s);
            row.alpha = cfg.train.alpha;
            row.lambda = cfg.train.lambda;
            auto r = run_experiment(cfg);
            row.final_errors.push_back(r.final_error);
            hs.push_back(std::move(r.history));
        }
        row.median = median(row.final_errors);
        row.reached = row.median < opt.threshold;
        res.rows.push_back(std::move(row));
        res.histories.push_back(std::move(hs));
    }
    return res;
}

double quantile(std::vector<double> v, double q) {
    require(!v.empty(), "quantile of empty set");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    require(a.size() == b.size() && a.size() >= 2, "spearman needs equal-length inputs");
    auto ranks = [](const std::vector<double>& x) {
        std::vector<std::size_t> idx(x.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::sort(idx.begin(), idx.end(), [&](auto i, auto j) { return x[i] < x[j]; });
        std::vector<double> r(x.size());
        for (std::size_t i = 0; i < idx.size();) {
            std::size_t j = i;
            while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j);
            i = j + 1;
        }
        return r;
    };
    const auto ra = ranks(a), rb = ranks(b);
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / static_cast<double>(ra.size());
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / static_cast<double>(rb.size());
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

std::vector<ConditionRow> condition_trace(const std::vector<History>& runs) {
    require(!runs.empty(), "no runs");
    const std::size_t depth = runs.front().depth;
    std::size_t iters = runs.front().rows.size();
    for (const auto& h : runs) iters = std::min(iters, h.rows.size());
    std::vector<ConditionRow> out;
    for (std::size_t it = 0; it < iters; ++it) {
        bool have = true;
        for (const auto& h : runs) have = have && h.rows[it].layers.size() == depth;
        if (!have) continue;
        ConditionRow row;
        row.iteration = runs.front().rows[it].iteration;
        for (std::size_t l = 0; l < depth; ++l) {
            std::vector<double> k, r;
            for (const auto& h : runs) {
                k.push_back(h.rows[it].layers[l].kappa);
                r.push_back(static_cast<double>(h.rows[it].layers[l].rank));
            }
            row.kappa_median.push_back(median(k));
            row.kappa_q25.push_back(quantile(k, 0.25));
            row.kappa_q75.push_back(quantile(k, 0.75));
            row.rank_median.push_back(median(r));
            row.rank_q25.push_back(quantile(r, 0.25));
            row.rank_q75.push_back(quantile(r, 0.75));
        }
        out.push_back(std::move(row));
    }
    return out;
}

std::vector<ConditionRow> condition_trace(const ExperimentConfig& cfg, std::size_t repeats,
                                          std::vector<History>* runs) {
    require(cfg.train.algorithm == Algorithm::ngd && cfg.train.sketch == 0, "condition trace needs dense NGD");
    std::vector<History> hs;
    for (std::size_t s = 0; s < repeats; ++s) {
        auto c = cfg;
        c.seed = cfg.seed + s;
        c.out_dir.clear();
        hs.push_back(run_experiment(c).history);
    }
    auto rows = condition_trace(hs);
    if (runs) *runs = std::move(hs);
    return rows;
}

void write_dataset_csv(std::ostream& os, const Dataset& data) {
    for (Index k = 0; k < data.x.cols(); ++k) os << 'x' << k + 1 << ',';
    for (Index k = 0; k < data.y.cols(); ++k) os << (k ? "," : "") << 'y' << k + 1;
    os << '\n';
    for (Index i = 0; i < data.x.rows(); ++i) {
        for (Index k = 0; k < data.x.cols(); ++k) os << num(data.x(i, k)) << ',';
        for (Index k = 0; k < data.y.cols(); ++k) os << (k ? "," : "") << num(data.y(i, k));
        os << '\n';
    }
}

void write_summary_csv(std::ostream& os, const ExperimentConfig& cfg, const ExperimentResult& r) {
    os << "problem,d,algorithm,seed,iterations,final_error,wall_time\n";
    os << cfg.problem << ',' << cfg.d << ',' << algorithm_name(cfg.train.algorithm) << ',' << cfg.seed << ','
       << r.iterations << ',' << num(r.final_error) << ',' << num(r.wall_time) << '\n';
}

void write_rank_sweep_csv(std::ostream& os, const std::vector<RankSweepRow>& rows) {
    os << "rank,ranks,parameters,mean,std,min,max\n";
    for (const auto& r : rows)
        os << r.rank << ',' << join(r.ranks) << ',' << r.parameters << ',' << num(r.mean) << ',' << num(r.stddev)
           << ',' << num(r.min) << ',' << num(r.max) << '\n';
}

void write_sketch_summary_csv(std::ostream& os, const std::vector<SketchSweepRow>& rows) {
    os << "size,alpha,lambda,median,reached,seeds\n";
    for (const auto& r : rows)
        os << r.size << ',' << num(r.alpha) << ',' << num(r.lambda) << ',' << num(r.median) << ','
           << (r.reached ? 1 : 0) << ',' << r.final_errors.size() << '\n';
}

void write_sketch_history_csv(std::ostream& os, const SketchSweepOptions& opt, const SketchSweepResult& r) {
    os << "size,seed,iteration,val_error\n";
    for (std::size_t a = 0; a < r.histories.size(); ++a)
        for (std::size_t s = 0; s < r.histories[a].size(); ++s)
            for (const auto& row : r.histories[a][s].rows)
                os << opt.sizes[a] << ',' << s << ',' << row.iteration << ',' << num(row.val_error) << '\n';
}

void write_condition_csv(std::ostream& os, const std::vector<ConditionRow>& rows) {
    const std::size_t depth = rows.empty() ? 0 : rows.front().kappa_median.size();
    os << "iteration";
    for (std::size_t l = 1; l <= depth; ++l)
        for (const char* c : {"kappa_median", "kappa_q25", "kappa_q75", "rank_median", "rank_q25", "rank_q75"})
            os << ',' << c << '_' << l;
    os << '\n';
    for (const auto& r : rows) {
        os << r.iteration;
        for (std::size_t l = 0; l < depth; ++l)
            os << ',' << num(r.kappa_median[l]) << ',' << num(r.kappa_q25[l]) << ',' << num(r.kappa_q75[l]) << ','
               << num(r.rank_median[l]) << ',' << num(r.rank_q25[l]) << ',' << num(r.rank_q75[l]);
        os << '\n';
    }
}

}  // namespace ctt
