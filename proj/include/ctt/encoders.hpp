#pragma once

// Exact constructions of CTT models for classical function classes.

#include "ctt/model.hpp"

#include <cstdint>
#include <vector>

namespace ctt {

/// One multilinear term coef * prod_k phi_{features[k].second}(h_{features[k].first})
/// contributing to output slot `out`.
struct LayerTerm {
    std::size_t out = 0;
    double coef = 0.0;
    std::vector<std::pair<std::size_t, std::size_t>> factors;  // (state slot, feature index)
};

/// Layer from a sum of separable terms, assembled as a CP tensor and rounded
/// to its exact TT ranks.
[[nodiscard]] CTTLayer layer_from_terms(std::size_t p, std::size_t n, const std::vector<LayerTerm>& terms);

/// (Id + psi)(h) = A h + b on R^p; explicit cores of rank p on A - I.
[[nodiscard]] CTTLayer encode_affine(const FeatureBasis& basis, const Matrix& a, const Vector& b);

/// Affine map acting on the first slot of each of the p/block blocks:
/// y_{s*block} <- (A y_{:,0} + b)_s, all other slots untouched. Ranks <= p/block.
[[nodiscard]] CTTLayer encode_block_affine(const FeatureBasis& basis, const Matrix& a, const Vector& b,
                                           std::size_t block);

/// Horner scheme for a_0 + a_1 x + ... + a_d x^d; width 2, d + 1 layers,
/// lift x -> (0, x), retraction slot 0.
[[nodiscard]] CTTModel encode_univariate_poly(const FeatureBasis& basis, const std::vector<double>& coeffs);

/// Horner scheme as an activation block: lift x -> (x, 0), retraction slot 0,
/// final state (sigma(x), x). The first layer also accepts a stale second slot.
[[nodiscard]] CTTModel encode_poly_activation(const FeatureBasis& basis, const std::vector<double>& coeffs);

struct SparsePolynomial {
    std::size_t dim = 0;
    std::vector<std::vector<unsigned>> exponents;
    std::vector<double> coeffs;

    void validate() const;
    [[nodiscard]] double operator()(const Vector& x) const;
    /// N_j = max_alpha alpha_j.
    [[nodiscard]] std::vector<unsigned> max_degrees() const;
};

struct SparsePolyEncoding {
    CTTModel model;
    std::size_t layer_count = 0;  // as counted during construction
    std::size_t layer_bound = 0;  // closed-form bound
};

/// Slots: 0 accumulator, 1..d variables, d+1 register, d+2..d+1+q workspace.
[[nodiscard]] SparsePolyEncoding encode_sparse_poly(const FeatureBasis& basis, const SparsePolynomial& poly,
                                                    std::size_t q);

/// |Lambda| (2 + d) + sum_alpha sum_j floor(log_q(alpha_j + 1)).
[[nodiscard]] std::size_t sparse_poly_layer_bound(const SparsePolynomial& poly, std::size_t q);

/// Places a layer of width p_sub at slots offset..offset+p_sub-1 of a width-p state.
[[nodiscard]] TTTensor embed_layer(const CTTLayer& layer, std::size_t p, std::size_t offset);

/// x -> (f(x), g(x)), width p_f + p_g, max(L_f, L_g) layers.
[[nodiscard]] CTTModel concat_ct(const CTTModel& f, const CTTModel& g);

/// x -> (sigma(x_1), ..., sigma(x_d)) for a scalar sigma model.
[[nodiscard]] CTTModel vectorize_activation(const CTTModel& sigma, std::size_t d);

struct Activation {
    enum class Kind { identity, relu, polynomial };
    Kind kind = Kind::relu;
    std::vector<double> coeffs;  // polynomial case

    [[nodiscard]] double operator()(double x) const;
};

struct DNNSpec {
    std::vector<Matrix> weights;  // T_l(x) = W_l x + b_l
    std::vector<Vector> biases;
    Activation activation;

    void validate() const;
    [[nodiscard]] std::size_t input_dim() const { return static_cast<std::size_t>(weights.front().cols()); }
    [[nodiscard]] std::size_t output_dim() const { return static_cast<std::size_t>(weights.back().rows()); }
    [[nodiscard]] std::size_t max_width() const;
    [[nodiscard]] Vector operator()(const Vector& x) const;
};

struct DNNEncoding {
    CTTModel model;
    std::vector<bool> affine_layer;  // true where the layer encodes some T_l
    std::size_t layer_bound = 0;     // 2L - 1, or L + (L - 1) L_sigma
};

/// Activations in span(Phi) use the merged 2L - 1 layer path at width p_f
/// (ReLU needs relu_abs); polynomial activations use Horner blocks.
[[nodiscard]] DNNEncoding encode_dnn(const FeatureBasis& basis, const DNNSpec& spec);

/// Quadratic-form flow layer h -> tau * h_0 * (-1/2 h_{1:}^T G h_{1:}) e_0.
[[nodiscard]] CTTLayer gaussian_flow_layer(const Matrix& gamma, double tau);

/// Explicit Euler CTT for exp(-1/2 x^T G x): N layers, width d + 1, basis
/// {1, x, x^2}, lift x -> (1, x), retraction slot 0.
[[nodiscard]] CTTModel build_gaussian_flow(const Matrix& gamma, std::size_t steps);

/// Ranks of the odd-then-even permuted Markov density; chain_ranks = (m_2, ..., m_d).
[[nodiscard]] std::vector<std::size_t> predicted_permuted_markov_ranks(const std::vector<std::size_t>& chain_ranks,
                                                                       std::size_t d);

/// 0-based odd-then-even order (0, 2, 4, ..., 1, 3, ...).
[[nodiscard]] std::vector<std::size_t> markov_permutation(std::size_t d);

/// Matrix P with (P x)_k = x_{perm[k]}.
[[nodiscard]] Matrix permutation_matrix(const std::vector<std::size_t>& perm);

/// Tabular chain density f1(x1) prod K_j(x_{j-1}, x_j) on a grid of
/// `grid` points per mode with rank-m_j nonnegative transition tables.
[[nodiscard]] DenseTensor markov_density(const std::vector<std::size_t>& chain_ranks, std::size_t grid,
                                         std::uint64_t seed);

/// Reorders tensor modes: result(i_0, ..., i_{d-1}) = t(..., i_k at position perm[k], ...).
[[nodiscard]] DenseTensor permute_modes(const DenseTensor& t, const std::vector<std::size_t>& perm);

}  // namespace ctt
