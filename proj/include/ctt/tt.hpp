#pragma once

#include "ctt/dense_tensor.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace ctt {

/// Tensor train with cores U_j of shape (r_{j-1}, n_j, r_j), r_d = 1.
/// r_0 > 1 encodes a vector-valued tensor: slot j of the output is the train
/// obtained by fixing the left index of the first core to j.
class TTTensor {
public:
    TTTensor() = default;
    explicit TTTensor(std::vector<DenseTensor> cores);

    [[nodiscard]] std::size_t order() const noexcept { return cores_.size(); }
    [[nodiscard]] std::size_t output_rank() const { return cores_.front().dim(0); }
    [[nodiscard]] Shape mode_sizes() const;
    /// (r_0, r_1, ..., r_d).
    [[nodiscard]] std::vector<std::size_t> ranks() const;
    /// (r_1, ..., r_{d-1}).
    [[nodiscard]] std::vector<std::size_t> internal_ranks() const;
    [[nodiscard]] std::size_t max_rank() const;
    [[nodiscard]] std::size_t parameter_count() const;

    [[nodiscard]] const std::vector<DenseTensor>& cores() const noexcept { return cores_; }
    [[nodiscard]] std::vector<DenseTensor>& cores() noexcept { return cores_; }
    [[nodiscard]] const DenseTensor& core(std::size_t j) const { return cores_.at(j); }
    [[nodiscard]] DenseTensor& core(std::size_t j) { return cores_.at(j); }

    void validate() const;

private:
    std::vector<DenseTensor> cores_;
};

/// Canonical (CP) tensor: sum_t w_t v_t^(1) (x) ... (x) v_t^(d). Factor i is an
/// n_i x r matrix whose columns are the term vectors.
struct CPTensor {
    std::vector<Matrix> factors;
    Vector weights;  // empty means all ones

    [[nodiscard]] std::size_t order() const { return factors.size(); }
    [[nodiscard]] std::size_t rank() const;
    [[nodiscard]] double weight(std::size_t t) const { return weights.size() ? weights(t) : 1.0; }
    void validate() const;
};

struct TruncationPolicy {
    enum class Kind { ranks, relative };
    Kind kind = Kind::relative;
    std::vector<std::size_t> ranks;  // r_1, ..., r_{d-1}; a single entry is broadcast
    double eps = 0.0;

    static TruncationPolicy max_ranks(std::vector<std::size_t> r) { return {Kind::ranks, std::move(r), 0.0}; }
    static TruncationPolicy uniform_rank(std::size_t r) { return {Kind::ranks, {r}, 0.0}; }
    static TruncationPolicy relative(double eps) { return {Kind::relative, {}, eps}; }
    static TruncationPolicy exact() { return relative(0.0); }

    [[nodiscard]] std::size_t rank_at(std::size_t k) const;
};

/// TT-SVD of a scalar tensor (r_0 = 1).
[[nodiscard]] TTTensor tt_svd(const DenseTensor& t, const TruncationPolicy& policy);
/// TT-SVD treating mode 0 as the output slot index, so r_0 = t.dim(0).
[[nodiscard]] TTTensor tt_svd_vector(const DenseTensor& t, const TruncationPolicy& policy);

/// Dense reconstruction; shape (n_1..n_d), or (r_0, n_1..n_d) when r_0 > 1.
[[nodiscard]] DenseTensor reconstruct(const TTTensor& a);

[[nodiscard]] TTTensor tt_round(const TTTensor& a, const TruncationPolicy& policy);

/// Orthogonalizes cores right-to-left so cores 2..d are right-orthogonal.
[[nodiscard]] TTTensor right_orthogonalize(const TTTensor& a);
/// Orthogonalizes cores left-to-right so cores 1..d-1 are left-orthogonal.
[[nodiscard]] TTTensor left_orthogonalize(const TTTensor& a);

[[nodiscard]] TTTensor cp_to_tt(const CPTensor& c);
[[nodiscard]] DenseTensor cp_reconstruct(const CPTensor& c);

[[nodiscard]] double tt_entry(const TTTensor& a, std::span<const std::size_t> index, std::size_t slot = 0);

/// alpha*A + beta*B.
[[nodiscard]] TTTensor tt_add_scale(const TTTensor& a, const TTTensor& b, double alpha, double beta);
[[nodiscard]] TTTensor tt_scale(const TTTensor& a, double s);
[[nodiscard]] TTTensor tt_zeros(std::size_t r0, const Shape& modes);

[[nodiscard]] double tt_dot(const TTTensor& a, const TTTensor& b);
/// Norm through orthogonalization (no cancellation in the squared sum).
[[nodiscard]] double tt_norm(const TTTensor& a);

/// <A, (M_1 (x) ... (x) M_d) B>, with M_k an n_k x n_k matrix acting on mode k.
[[nodiscard]] double tt_bilinear(const TTTensor& a, std::span<const Matrix> mats, const TTTensor& b);

/// Applies M_k to mode k of every core; ranks are unchanged.
[[nodiscard]] TTTensor tt_apply_modes(const TTTensor& a, std::span<const Matrix> mats);

/// Inserts the output slot index as an explicit first mode (r_0 becomes 1).
[[nodiscard]] TTTensor tt_expand_output(const TTTensor& a);
/// Inverse of tt_expand_output: contracts the first mode into r_0.
[[nodiscard]] TTTensor tt_absorb_output(const TTTensor& a);

/// Numerical ranks of all unfoldings of a dense tensor (first k modes vs rest).
[[nodiscard]] std::vector<std::size_t> unfolding_ranks(const DenseTensor& t, double rel = 1e-12);

}  // namespace ctt
