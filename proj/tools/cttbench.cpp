// cttbench: datasets, training runs, sweeps, encoder demos and compression.

#include "ctt/bench.hpp"
#include "ctt/compressor.hpp"
#include "ctt/encoders.hpp"
#include "ctt/error.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

using namespace ctt;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::ofstream out_file(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    return os;
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
    std::normal_distribution<double> nd;
    const auto n = static_cast<Eigen::Index>(d);
    Matrix a(n, n);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = nd(rng);
    return a * a.transpose() / static_cast<double>(d) + 0.5 * Matrix::Identity(n, n);
}

double max_error(const CTTModel& m, const Matrix& x, const std::function<Vector(const Vector&)>& ref) {
    double e = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        Vector xi = x.row(i).transpose();
        e = std::max(e, (m(xi) - ref(xi)).cwiseAbs().maxCoeff());
    }
    return e;
}

void print_ranks(const CTTModel& m) {
    for (std::size_t l = 0; l < m.depth(); ++l) {
        std::cout << "  layer " << l + 1 << " ranks";
        for (auto r : m.layer(l).tt_ranks()) std::cout << ' ' << r;
        std::cout << '\n';
    }
}

int encode(const std::string& kind, std::size_t d, std::size_t points, std::uint64_t seed, const std::string& out) {
    const Matrix x = uniform(points, d, -1.0, 1.0, seed);
    CTTModel model;
    double err = 0.0;
    if (kind == "affine") {
        Matrix a = Matrix::Random(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        Vector b = Vector::Random(static_cast<Eigen::Index>(d));
        const auto basis = FeatureBasis::affine();
        model = CTTModel(basis, Lift::identity(d), {encode_affine(basis, a, b)}, Retraction::first_slots(d, d));
        err = max_error(model, x, [&](const Vector& v) -> Vector { return a * v + b; });
    } else if (kind == "horner") {
        std::vector<double> c{0.5, -1.0, 0.25, 2.0};
        model = encode_univariate_poly(FeatureBasis::affine(), c);
        err = max_error(model, x.leftCols(1), [&](const Vector& v) {
            double s = 0.0;
            for (std::size_t k = c.size(); k-- > 0;) s = s * v(0) + c[k];
            return Vector::Constant(1, s);
        });
    } else if (kind == "sparse-poly") {
        SparsePolynomial poly;
        poly.dim = d;
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<unsigned> e(0, 3);
        for (int t = 0; t < 4; ++t) {
            std::vector<unsigned> a(d);
            for (auto& v : a) v = e(rng);
            poly.exponents.push_back(a);
            poly.coeffs.push_back(1.0 + t);
        }
        auto enc = encode_sparse_poly(FeatureBasis::affine(), poly, 2);
        model = enc.model;
        std::cout << "layers " << enc.layer_count << " (bound " << enc.layer_bound << ")\n";
        err = max_error(model, x, [&](const Vector& v) { return Vector::Constant(1, poly(v)); });
    } else if (kind == "relu-dnn") {
        DNNSpec spec;
        std::size_t in = d;
        for (std::size_t w : {d + 1, d + 1, std::size_t{1}}) {
            spec.weights.push_back(Matrix::Random(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(in)));
            spec.biases.push_back(Vector::Random(static_cast<Eigen::Index>(w)));
            in = w;
        }
        auto enc = encode_dnn(FeatureBasis::relu_abs(), spec);
        model = enc.model;
        std::cout << "layers " << model.depth() << " (bound " << enc.layer_bound << ")\n";
        err = max_error(model, x, [&](const Vector& v) { return spec(v); });
    } else if (kind == "gaussian") {
        Matrix g = random_spd(d, seed);
        model = build_gaussian_flow(g, 64);
        err = max_error(model, x, [&](const Vector& v) { return Vector::Constant(1, std::exp(-0.5 * v.dot(g * v))); });
    } else {
        throw std::invalid_argument("unknown encoder '" + kind + "'");
    }
    std::cout << kind << ": width " << model.width() << ", " << model.depth() << " layers, max abs error " << err
              << " on " << points << " points\n";
    print_ranks(model);
    if (!out.empty()) save_model(out, model);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Compositional tensor train experiments"};
    app.require_subcommand(1);

    std::size_t d = 4, n_train = 2048, n_val = 512, repeats = 25, iterations = 400, points = 500, samples = 10000;
    std::size_t max_rank = 9, steps = 16;
    std::uint64_t seed = 0;
    std::string out, config, kind = "affine", model_path, report;
    std::vector<std::size_t> sizes{20, 30, 40, 64};
    double eps = 1e-2, lo = -1.0, hi = 1.0;

    auto* gen = app.add_subcommand("gen-data", "write recovery train/validation CSVs");
    gen->add_option("--d", d);
    gen->add_option("--n-train", n_train);
    gen->add_option("--n-val", n_val);
    gen->add_option("--seed", seed);
    gen->add_option("--out", out, "output directory")->required();

    auto* tr = app.add_subcommand("train", "run one experiment from a JSON config");
    tr->add_option("--config", config, "JSON config")->required()->check(CLI::ExistingFile);
    tr->add_option("--out", out, "output directory (overrides out_dir)");

    auto* rs = app.add_subcommand("rank-sweep", "TT regression error against uniform rank");
    rs->add_option("--repeats", repeats);
    rs->add_option("--max-rank", max_rank);
    rs->add_option("--n-train", n_train);
    rs->add_option("--n-val", n_val);
    rs->add_option("--out", out, "CSV path")->required();

    auto* ss = app.add_subcommand("sketch-sweep", "sketched NGD for several sketch sizes");
    ss->add_option("--sizes", sizes);
    ss->add_option("--repeats", repeats);
    ss->add_option("--iterations", iterations);
    ss->add_option("--out", out, "output directory")->required();

    auto* ct = app.add_subcommand("condition-trace", "Gram condition numbers and ranks over repeated runs");
    ct->add_option("--config", config, "JSON config (default: d=4 NGD preset)");
    ct->add_option("--repeats", repeats);
    ct->add_option("--out", out, "CSV path")->required();

    auto* en = app.add_subcommand("encode", "exact encoder demos");
    en->add_option("--kind", kind)->check(CLI::IsMember({"affine", "horner", "sparse-poly", "relu-dnn", "gaussian"}));
    en->add_option("--d", d);
    en->add_option("--points", points);
    en->add_option("--seed", seed);
    en->add_option("--out", out, "model file");

    auto* co = app.add_subcommand("compress", "layerwise compression with an error budget");
    co->add_option("--model", model_path, "model file (default: Gaussian flow)");
    co->add_option("--d", d);
    co->add_option("--steps", steps, "Euler steps of the default model");
    co->add_option("--eps", eps);
    co->add_option("--samples", samples);
    co->add_option("--lo", lo);
    co->add_option("--hi", hi);
    co->add_option("--seed", seed);
    co->add_option("--out", out, "compressed model file");
    co->add_option("--report", report, "report path (.csv or .json)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            auto data = gen_recovery_dataset(d, n_train, n_val, seed);
            auto a = out_file(fs::path(out) / "train.csv");
            write_dataset_csv(a, data.train);
            auto b = out_file(fs::path(out) / "val.csv");
            write_dataset_csv(b, data.val);
        } else if (*tr) {
            auto cfg = config_from_json(slurp(config));
            if (!out.empty()) cfg.out_dir = out;
            auto r = run_experiment(cfg);
            write_summary_csv(std::cout, cfg, r);
        } else if (*rs) {
            RankSweepOptions o;
            o.repeats = repeats;
            o.n_train = n_train;
            o.n_val = n_val;
            o.ranks.clear();
            for (std::size_t r = 1; r <= max_rank; ++r) o.ranks.push_back(r);
            auto rows = rank_sweep(o);
            auto os = out_file(out);
            write_rank_sweep_csv(os, rows);
            write_rank_sweep_csv(std::cout, rows);
        } else if (*ss) {
            SketchSweepOptions o;
            o.sizes = sizes;
            o.repeats = repeats;
            o.iterations = iterations;
            auto r = sketch_sweep(o);
            auto a = out_file(fs::path(out) / "sketch_summary.csv");
            write_sketch_summary_csv(a, r.rows);
            auto b = out_file(fs::path(out) / "sketch_history.csv");
            write_sketch_history_csv(b, o, r);
            write_sketch_summary_csv(std::cout, r.rows);
        } else if (*ct) {
            auto cfg = config.empty() ? recovery_preset(4) : config_from_json(slurp(config));
            auto rows = condition_trace(cfg, repeats);
            auto os = out_file(out);
            write_condition_csv(os, rows);
        } else if (*en) {
            return encode(kind, d, points, seed, out);
        } else if (*co) {
            CTTModel m = model_path.empty() ? build_gaussian_flow(random_spd(d, seed), steps) : load_model(model_path);
            const Matrix x = uniform(samples, m.input_dim(), lo, hi, seed + 1);
            auto res = compress(m, eps, x);
            for (const auto& w : res.report.warnings) std::cerr << "warning: " << w << '\n';
            if (!out.empty()) save_model(out, res.model);
            if (!report.empty()) {
                auto os = out_file(report);
                if (fs::path(report).extension() == ".json") write_compression_json(os, res.report);
                else write_compression_csv(os, res.report);
            }
            write_compression_csv(std::cout, res.report);
            std::cout << "measured relative error " << res.report.measured_error << " (eps " << eps << ")\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "cttbench: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
