#pragma once

// Fixed-rank one-site alternating schemes: linear systems with CP-structured
// operators, and sampled least-squares regression in TT format.

#include "ctt/basis.hpp"
#include "ctt/tt.hpp"

#include <cstdint>
#include <vector>

namespace ctt {

/// Sum_t C_{t,0} (x) ... (x) C_{t,d-1} acting on tensors of shape (n_0, ..., n_{d-1}).
struct CPOperator {
    std::vector<std::vector<Matrix>> terms;
    bool symmetric = true;

    [[nodiscard]] std::size_t order() const { return terms.empty() ? 0 : terms.front().size(); }
    [[nodiscard]] Shape mode_sizes() const;
    void validate() const;
    /// Dense N x N matrix, first mode slowest; desk scale only.
    [[nodiscard]] Matrix dense() const;
    [[nodiscard]] DenseTensor apply(const DenseTensor& x) const;
    /// A^T A with A^T b handled by the caller; T^2 terms.
    [[nodiscard]] CPOperator normal() const;
    [[nodiscard]] CPOperator transposed() const;
};

struct ALSOptions {
    std::vector<std::size_t> ranks;  // r_1..r_{d-1}; one entry is broadcast; capped at the feasible ranks
    std::size_t sweeps = 10;
    double rtol = 1e-12;
    std::uint64_t seed = 0;
};

struct ALSReport {
    std::vector<double> residuals;  // relative, after each full sweep (index 0 is the initial guess)
    std::vector<double> energies;   // after every local update
    std::size_t sweeps = 0;
    bool regularized = false;
};

/// Minimizes 1/2 <x, A x> - <x, b> over TT tensors with the given ranks
/// (non-symmetric operators are replaced by their normal equations).
[[nodiscard]] TTTensor als_solve(const CPOperator& a, const TTTensor& rhs, const ALSOptions& opt,
                                 ALSReport* report = nullptr);
[[nodiscard]] TTTensor als_solve(const CPOperator& a, const CPTensor& rhs, const ALSOptions& opt,
                                 ALSReport* report = nullptr);

/// ||A x - b|| / ||b||.
[[nodiscard]] double als_residual(const CPOperator& a, const TTTensor& x, const TTTensor& rhs);

struct RegressionOptions {
    std::vector<std::size_t> ranks;
    std::size_t sweeps = 20;
    double rtol = 1e-10;
    std::uint64_t seed = 0;
};

struct RegressionReport {
    double train_error = 0.0;
    double validation_error = 0.0;
    std::size_t sweeps = 0;
    std::size_t parameters = 0;
    bool regularized = false;
    std::vector<double> train_history;
};

/// f(x) = sum_alpha C[alpha] phi_{alpha_1}(x_1) ... phi_{alpha_d}(x_d).
[[nodiscard]] double tt_function(const TTTensor& coef, const FeatureBasis& basis, const Vector& x);
[[nodiscard]] Vector tt_function_batch(const TTTensor& coef, const FeatureBasis& basis, const Matrix& x);

/// Relative empirical L2 error of the TT function on (x, y).
[[nodiscard]] double tt_function_error(const TTTensor& coef, const FeatureBasis& basis, const Matrix& x,
                                       const Vector& y);

[[nodiscard]] TTTensor tt_regression(const Matrix& x, const Vector& y, const FeatureBasis& basis,
                                     const RegressionOptions& opt, RegressionReport* report = nullptr,
                                     const Matrix* x_val = nullptr, const Vector* y_val = nullptr);

/// Ranks broadcast from `ranks` and capped so that no bond exceeds the
/// dimension of either side.
[[nodiscard]] std::vector<std::size_t> feasible_ranks(const Shape& modes, const std::vector<std::size_t>& ranks);

/// Random TT with i.i.d. N(0, 1) core entries.
[[nodiscard]] TTTensor random_tt(const Shape& modes, const std::vector<std::size_t>& ranks, std::uint64_t seed);

}  // namespace ctt
