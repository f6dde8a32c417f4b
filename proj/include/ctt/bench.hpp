#pragma once

// Experiment harness: recovery datasets, experiment configs, sweeps and CSV tables.

#include "ctt/optim.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ctt {

/// prod_{i<m} (x_i y - x_{m+i})^2 with m = d / 2, y = 1 (d even) or x_{d-1} (d odd).
[[nodiscard]] double recovery_target(const Vector& x);

struct RecoveryData {
    Dataset train, val;
};

/// Uniform samples on [0,1]^d; train and validation use separate seed streams.
[[nodiscard]] RecoveryData gen_recovery_dataset(std::size_t d, std::size_t n_train, std::size_t n_val,
                                                std::uint64_t seed);

struct ExperimentConfig {
    std::string problem = "recovery";
    std::size_t d = 4;
    std::size_t n_train = 2048, n_val = 512;
    TrainConfig train;
    std::string basis = "affine";
    std::size_t width = 0;  // 0 = d
    std::size_t depth = 2;
    double init_scale = 2.0;
    std::string out_dir;  // empty = no files
    std::uint64_t seed = 0;

    void validate() const;
};

/// NGD settings per dimension (d=4: 0.7, 1e-12; d=5: 0.5, 1e-11), Adam at 1e-3.
[[nodiscard]] ExperimentConfig recovery_preset(std::size_t d, Algorithm a = Algorithm::ngd);

/// Sketch sizes 20, 30, 40 get their tuned (alpha, lambda); anything else uses (0.7, 1e-12).
void apply_sketch_preset(TrainConfig& cfg, std::size_t s);

[[nodiscard]] ExperimentConfig config_from_json(const std::string& text);
[[nodiscard]] std::string config_to_json(const ExperimentConfig& cfg);

/// Lift Id, retraction e_1, init N(0, c / (L n^p)).
[[nodiscard]] CTTModel make_recovery_model(const ExperimentConfig& cfg);

struct ExperimentResult {
    CTTModel model;
    History history;
    double final_error = 0.0;
    double wall_time = 0.0;
    std::size_t iterations = 0;
};

/// Trains and, if out_dir is set, writes history.csv, model.ctt and summary.csv.
[[nodiscard]] ExperimentResult run_experiment(const ExperimentConfig& cfg);

// -- sweeps -----------------------------------------------------------------------

struct RankSweepRow {
    std::size_t rank = 0;
    std::vector<std::size_t> ranks;  // realized (r_1..r_{d-1})
    std::size_t parameters = 0;
    double mean = 0.0, stddev = 0.0, min = 0.0, max = 0.0;
    std::vector<double> errors;  // per seed
};

struct RankSweepOptions {
    std::size_t d = 4;
    std::vector<std::size_t> ranks{1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::size_t repeats = 25;
    std::size_t n_train = 2048, n_val = 512;
    std::string basis = "quadratic";
    std::size_t sweeps = 20;
};

[[nodiscard]] std::vector<RankSweepRow> rank_sweep(const RankSweepOptions& opt);

struct SketchSweepRow {
    std::size_t size = 0;  // 0 = dense Gram
    double alpha = 0.0, lambda = 0.0;
    std::vector<double> final_errors;  // per seed, after the last iteration
    double median = 0.0;
    bool reached = false;  // median below threshold
};

struct SketchSweepOptions {
    std::vector<std::size_t> sizes{20, 30, 40, 64};
    std::size_t repeats = 25;
    std::size_t iterations = 400;
    double threshold = 1e-2;
};

struct SketchSweepResult {
    std::vector<SketchSweepRow> rows;
    std::vector<std::vector<History>> histories;  // [size][seed]
};

[[nodiscard]] SketchSweepResult sketch_sweep(const SketchSweepOptions& opt);

/// Per iteration and layer: median, 25% and 75% quantiles of kappa and rank over runs.
struct ConditionRow {
    std::size_t iteration = 0;
    std::vector<double> kappa_median, kappa_q25, kappa_q75;
    std::vector<double> rank_median, rank_q25, rank_q75;
};

[[nodiscard]] std::vector<ConditionRow> condition_trace(const std::vector<History>& runs);
[[nodiscard]] std::vector<ConditionRow> condition_trace(const ExperimentConfig& cfg, std::size_t repeats,
                                                        std::vector<History>* runs = nullptr);

[[nodiscard]] double quantile(std::vector<double> v, double q);
[[nodiscard]] double median(std::vector<double> v);
/// Spearman rank correlation (average ranks for ties).
[[nodiscard]] double spearman(const std::vector<double>& a, const std::vector<double>& b);

// -- CSV ---------------------------------------------------------------------------

void write_dataset_csv(std::ostream& os, const Dataset& data);
/// problem,d,algorithm,seed,iterations,final_error,wall_time
void write_summary_csv(std::ostream& os, const ExperimentConfig& cfg, const ExperimentResult& r);
/// rank,ranks,parameters,mean,std,min,max
void write_rank_sweep_csv(std::ostream& os, const std::vector<RankSweepRow>& rows);
/// size,alpha,lambda,median,reached,seeds
void write_sketch_summary_csv(std::ostream& os, const std::vector<SketchSweepRow>& rows);
/// size,seed,iteration,val_error
void write_sketch_history_csv(std::ostream& os, const SketchSweepOptions& opt, const SketchSweepResult& r);
/// iteration, then kappa_median_l, kappa_q25_l, kappa_q75_l, rank_median_l, rank_q25_l, rank_q75_l per layer
void write_condition_csv(std::ostream& os, const std::vector<ConditionRow>& rows);

}  // namespace ctt
