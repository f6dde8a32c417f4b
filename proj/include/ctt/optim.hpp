#pragma once

// Training engines for CTT models: successive approximation on the control
// formulation, layerwise natural gradient (dense or sketched Gram), Adam.

#include "ctt/als.hpp"
#include "ctt/kernels.hpp"
#include "ctt/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace ctt {

enum class Algorithm { msa, ngd, adam };
enum class MsaRegularization { natural, frobenius };
enum class MsaSolver { dense, als };

[[nodiscard]] Algorithm algorithm_from_name(const std::string& s);
[[nodiscard]] std::string algorithm_name(Algorithm a);

struct TrainConfig {
    Algorithm algorithm = Algorithm::ngd;
    double alpha = 0.7;     // step size (learning rate for Adam)
    double lambda = 1e-12;  // Tikhonov
    double R = 1.0;         // MSA running-cost weight
    double gamma = 0.0;     // MSA augmentation
    MsaRegularization msa_reg = MsaRegularization::natural;
    MsaSolver msa_solver = MsaSolver::dense;
    std::size_t batch = 0;   // 0 = full batch
    std::size_t sketch = 0;  // 0 = dense Gram
    bool freeze_sketch = false;
    std::size_t iterations = 300;
    std::uint64_t seed = 0;
    std::vector<std::size_t> tt_ranks;  // empty = dense layers
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    Exec exec = Exec::parallel;

    void validate() const;
};

/// i.i.d. N(0, c / (L n^p)) dense layers.
[[nodiscard]] std::vector<CTTLayer> init_layers(std::size_t p, std::size_t n, std::size_t depth, double c,
                                                std::uint64_t seed);

// -- successive approximation ------------------------------------------------

struct CostateSet {
    std::vector<Matrix> lambda;  // k = 0..L, each B x p
};

/// lambda_L = 2 Rmat^T (Rmat X_L - y); lambda_k = dL_{k+1}/dX_k + (I + D psi_{k+1}(X_k))^T lambda_{k+1}.
/// The terminal cost is the unhalved squared norm; `fw` must carry layer Jacobians.
[[nodiscard]] CostateSet costates(const CTTModel& model, const BatchForward& fw, const Matrix& y, double R,
                                  MsaRegularization reg);

/// Running plus terminal cost starting from the lifted state u0.
[[nodiscard]] double control_cost(const CTTModel& model, const Vector& u0, const Vector& y, double R,
                                  MsaRegularization reg);

struct MsaReport {
    std::vector<bool> regularized;  // per layer: ridge retry was needed
};

/// One MSA iteration: all layers updated from the same states and costates.
[[nodiscard]] CTTModel msa_update(const CTTModel& model, const Dataset& batch, const TrainConfig& cfg,
                                  MsaReport* report = nullptr);

/// CP operator and right-hand side of the layer-l update equation
/// G Z = rhs with Z = (R + gamma) psi_new - gamma psi_old (natural regularization).
struct MsaSystem {
    CPOperator op;
    CPTensor rhs;
};
[[nodiscard]] MsaSystem msa_system(const CTTModel& model, const BatchForward& fw, const CostateSet& cs,
                                   std::size_t l);

// -- natural gradient ----------------------------------------------------------

struct GramData {
    enum class Kind { dense, nystrom };
    Kind kind = Kind::dense;
    std::size_t layer = 0;
    Matrix dense;        // N x N
    Matrix basis;        // Nystrom: orthonormal U, N x k
    Vector eigenvalues;  // Nystrom: Sigma^2
    double lambda = 0.0;
    bool clipped = false;  // Nystrom core lost directions to eigenvalue clipping
};

[[nodiscard]] GramData assemble_gram(const CTTModel& model, const BatchForward& fw, std::size_t l,
                                     Exec exec = Exec::parallel);

/// Rank-one sketch vectors S_j = s_{j,0} (x) ... (x) s_{j,p} / sqrt(s).
struct Sketch {
    std::vector<std::vector<Vector>> factors;  // [j][k]
    [[nodiscard]] std::size_t size() const { return factors.size(); }
    [[nodiscard]] Matrix dense() const;  // N x s
};
[[nodiscard]] Sketch draw_sketch(std::size_t p, std::size_t n, std::size_t s, std::mt19937_64& rng);

/// G S evaluated per sample without forming G, then the Nystrom factors.
[[nodiscard]] GramData sketch_gram(const CTTModel& model, const BatchForward& fw, std::size_t l,
                                   const Sketch& sketch);
/// G S from the sketch factors (N x s), exposed for testing.
[[nodiscard]] Matrix sketch_images(const CTTModel& model, const BatchForward& fw, std::size_t l,
                                   const Sketch& sketch);

struct SolveReport {
    double residual = 0.0;  // ||(G + lambda I) w - rhs|| / ||rhs|| on the retained directions
    double dropped = 0.0;   // share of ||rhs|| outside the retained directions
    double lambda = 0.0;    // after escalation
    int escalations = 0;
    std::size_t kept = 0;   // eigen-directions used
};

/// (G + lambda I) w = rhs. Eigen-directions below 1e-14 * max are dropped (Nystrom:
/// the retained range of U); lambda grows by 10x (at most 3 times) while the
/// residual exceeds 1e-6 ||rhs|| or the solution is not finite.
[[nodiscard]] Vector solve_gram(const GramData& g, const Vector& rhs, double lambda, SolveReport* report = nullptr);

struct GramDiagnostics {
    double kappa = 1.0;
    std::size_t rank = 0;
    Vector spectrum;  // non-increasing
};
[[nodiscard]] GramDiagnostics gram_diagnostics(const GramData& g);
[[nodiscard]] GramDiagnostics spectrum_diagnostics(Vector spectrum);

struct LayerDiagnostics {
    double kappa = 1.0;
    std::size_t rank = 0;
    double residual = 0.0;
    double lambda = 0.0;
};

struct NgdState {
    std::mt19937_64 rng;
    std::vector<Sketch> frozen;
};

/// One layerwise natural-gradient step; every direction is computed before any layer changes.
[[nodiscard]] CTTModel ngd_step(const CTTModel& model, const Dataset& batch, const TrainConfig& cfg, NgdState& state,
                                std::vector<LayerDiagnostics>* diag = nullptr);

// -- Adam ----------------------------------------------------------------------

struct AdamState {
    std::vector<Vector> m, v;
    std::size_t t = 0;
};

/// Loss gradients per layer over the flattened dense coefficients.
[[nodiscard]] std::vector<Vector> loss_gradients(const CTTModel& model, const Dataset& batch, Exec exec);

[[nodiscard]] CTTModel adam_step(const CTTModel& model, const Dataset& batch, const TrainConfig& cfg,
                                 AdamState& state);

// -- driver --------------------------------------------------------------------

struct HistoryRow {
    std::size_t iteration = 0;
    double wall_time = 0.0;
    double train_loss = 0.0;
    double val_error = 0.0;
    std::vector<LayerDiagnostics> layers;
};

struct History {
    std::size_t depth = 0;
    std::vector<HistoryRow> rows;
};

/// iteration,wall_time,train_loss,val_error, then kappa_l, rank_l, residual_l per layer.
void write_history_csv(std::ostream& os, const History& h);

struct TrainResult {
    CTTModel model;
    History history;
};

/// Runs cfg.iterations steps; row i holds the state before step i + 1
/// (layer diagnostics of that step for NGD), the last row the final model.
[[nodiscard]] TrainResult train(const CTTModel& model, const Dataset& train_set, const Dataset& val_set,
                                const TrainConfig& cfg);

/// Replaces TT layers by their dense coefficients and applies cfg.tt_ranks if set.
[[nodiscard]] CTTLayer apply_rank_policy(const DenseTensor& coef, const TrainConfig& cfg);

}  // namespace ctt
