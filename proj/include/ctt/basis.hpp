#pragma once

#include "ctt/dense_tensor.hpp"

#include <string>
#include <string_view>

namespace ctt {

enum class BasisKind { affine, quadratic, relu_abs, monomial };

/// Univariate feature family Phi = (phi_1, ..., phi_n); phi_1 = 1 always.
///   affine    {1, x}
///   quadratic {1, x, x^2}
///   relu_abs  {1, x, |x|}       (|.|'(0) := 0)
///   monomial  {1, x, ..., x^k}
class FeatureBasis {
public:
    FeatureBasis() = default;

    static FeatureBasis affine() { return FeatureBasis(BasisKind::affine, 1); }
    static FeatureBasis quadratic() { return FeatureBasis(BasisKind::quadratic, 2); }
    static FeatureBasis relu_abs() { return FeatureBasis(BasisKind::relu_abs, 1); }
    static FeatureBasis monomial(int degree);
    /// "affine", "quadratic", "relu_abs", or "monomial:<k>".
    static FeatureBasis from_name(std::string_view name);

    [[nodiscard]] BasisKind kind() const noexcept { return kind_; }
    [[nodiscard]] int degree() const noexcept { return degree_; }
    [[nodiscard]] std::string name() const;
    [[nodiscard]] std::size_t size() const noexcept;

    void eval(double x, double* values) const;
    void eval(double x, double* values, double* derivs) const;
    [[nodiscard]] Vector eval(double x) const;

    /// Index of the identity feature, or -1.
    [[nodiscard]] int identity_index() const noexcept { return 1; }
    /// Index of |x| (relu_abs), or -1.
    [[nodiscard]] int abs_index() const noexcept { return kind_ == BasisKind::relu_abs ? 2 : -1; }
    /// Index of x^2, or -1.
    [[nodiscard]] int square_index() const noexcept;

    /// Upper bound on sup ||Phi'(x)||_2 over [-radius, radius].
    [[nodiscard]] double lipschitz_bound(double radius) const;

    bool operator==(const FeatureBasis&) const = default;

private:
    FeatureBasis(BasisKind k, int degree) : kind_(k), degree_(degree) {}
    BasisKind kind_ = BasisKind::affine;
    int degree_ = 1;
};

struct FeatureValues {
    Vector values;
    Vector derivs;  // empty unless requested
};

[[nodiscard]] FeatureValues eval_features(const FeatureBasis& basis, double x, bool with_derivative = false);
[[nodiscard]] Matrix feature_outer(const FeatureBasis& basis, double x);

}  // namespace ctt
