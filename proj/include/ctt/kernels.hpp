#pragma once

// Batched evaluation kernels. Each has a serial reference and an OpenMP
// version; both produce bit-identical results (per-sample work is
// independent and every reduction has a fixed order).

#include "ctt/model.hpp"

#include <vector>

namespace ctt {

enum class Exec { serial, parallel };

struct BatchForward {
    std::vector<Matrix> states;               // L + 1 matrices, B x p
    std::vector<std::vector<Matrix>> layer_jac;  // [k][i] = D psi_{k+1}(u_k(x_i)), empty unless requested
    Matrix output;                            // B x d_o

    [[nodiscard]] std::size_t batch() const { return static_cast<std::size_t>(output.rows()); }
    [[nodiscard]] Vector state(std::size_t k, std::size_t i) const {
        return states[k].row(static_cast<Eigen::Index>(i)).transpose();
    }
};

[[nodiscard]] BatchForward forward_batch(const CTTModel& model, const Matrix& x, bool with_jacobians,
                                         Exec exec = Exec::parallel);

/// d u_theta / d u_l per sample (d_o x p each), l a state index in 0..L.
[[nodiscard]] std::vector<Matrix> output_sensitivities(const CTTModel& model, const BatchForward& fw, std::size_t l,
                                                       Exec exec = Exec::parallel);

/// Rows are feature_tensor(u_k(x_i)); B x n^p.
[[nodiscard]] Matrix feature_batch(const FeatureBasis& basis, const Matrix& states, Exec exec = Exec::parallel);

/// Stacked parameter Jacobians of layer l (1-based): row i*d_o + o.
[[nodiscard]] Matrix parameter_jacobian_batch(const CTTModel& model, const BatchForward& fw, std::size_t l,
                                              Exec exec = Exec::parallel);

/// J^T J / B.
[[nodiscard]] Matrix gram_from_jacobian(const Matrix& jac, std::size_t batch, Exec exec = Exec::parallel);
/// J^T r / B.
[[nodiscard]] Vector gradient_from_jacobian(const Matrix& jac, const Vector& residual, std::size_t batch,
                                            Exec exec = Exec::parallel);

/// Flattens a B x d_o residual matrix row by row to match parameter_jacobian_batch rows.
[[nodiscard]] Vector flatten_rows(const Matrix& m);

[[nodiscard]] int max_threads();

}  // namespace ctt
