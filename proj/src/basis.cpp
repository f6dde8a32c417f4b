#include "ctt/basis.hpp"

#include "ctt/error.hpp"

#include <charconv>
#include <cmath>

namespace ctt {

FeatureBasis FeatureBasis::monomial(int degree) {
    require(degree >= 1, "monomial basis needs degree >= 1");
    return FeatureBasis(BasisKind::monomial, degree);
}

FeatureBasis FeatureBasis::from_name(std::string_view name) {
    if (name == "affine") return affine();
    if (name == "quadratic") return quadratic();
    if (name == "relu_abs") return relu_abs();
    constexpr std::string_view prefix = "monomial:";
    if (name.starts_with(prefix)) {
        int k = 0;
        auto tail = name.substr(prefix.size());
        auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), k);
        if (ec == std::errc() && ptr == tail.data() + tail.size()) return monomial(k);
    }
    argument_error("unknown feature basis '" + std::string(name) + "'");
}

std::string FeatureBasis::name() const {
    switch (kind_) {
        case BasisKind::affine: return "affine";
        case BasisKind::quadratic: return "quadratic";
        case BasisKind::relu_abs: return "relu_abs";
        case BasisKind::monomial: return "monomial:" + std::to_string(degree_);
    }
    return "affine";
}

std::size_t FeatureBasis::size() const noexcept {
    switch (kind_) {
        case BasisKind::affine: return 2;
        case BasisKind::quadratic: return 3;
        case BasisKind::relu_abs: return 3;
        case BasisKind::monomial: return static_cast<std::size_t>(degree_) + 1;
    }
    return 2;
}

int FeatureBasis::square_index() const noexcept {
    if (kind_ == BasisKind::quadratic) return 2;
    if (kind_ == BasisKind::monomial && degree_ >= 2) return 2;
    return -1;
}

void FeatureBasis::eval(double x, double* v) const {
    v[0] = 1.0;
    v[1] = x;
    switch (kind_) {
        case BasisKind::affine: break;
        case BasisKind::quadratic: v[2] = x * x; break;
        case BasisKind::relu_abs: v[2] = std::abs(x); break;
        case BasisKind::monomial:
            for (int j = 2; j <= degree_; ++j) v[j] = v[j - 1] * x;
            break;
    }
}

void FeatureBasis::eval(double x, double* v, double* dv) const {
    eval(x, v);
    dv[0] = 0.0;
    dv[1] = 1.0;
    switch (kind_) {
        case BasisKind::affine: break;
        case BasisKind::quadratic: dv[2] = 2.0 * x; break;
        case BasisKind::relu_abs: dv[2] = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); break;
        case BasisKind::monomial:
            for (int j = 2; j <= degree_; ++j) dv[j] = j * v[j - 1];
            break;
    }
}

Vector FeatureBasis::eval(double x) const {
    Vector v(static_cast<Eigen::Index>(size()));
    eval(x, v.data());
    return v;
}

double FeatureBasis::lipschitz_bound(double radius) const {
    const double a = std::abs(radius);
    switch (kind_) {
        case BasisKind::affine: return 1.0;
        case BasisKind::quadratic: return std::sqrt(1.0 + 4.0 * a * a);
        case BasisKind::relu_abs: return std::sqrt(2.0);
        case BasisKind::monomial: {
            double s = 0.0;
            for (int j = 1; j <= degree_; ++j) {
                const double dj = j * std::pow(a, j - 1);
                s += dj * dj;
            }
            return std::sqrt(s);
        }
    }
    return 1.0;
}

FeatureValues eval_features(const FeatureBasis& basis, double x, bool with_derivative) {
    require(std::isfinite(x), "eval_features: non-finite input");
    FeatureValues out;
    const auto n = static_cast<Eigen::Index>(basis.size());
    out.values.resize(n);
    if (with_derivative) {
        out.derivs.resize(n);
        basis.eval(x, out.values.data(), out.derivs.data());
    } else {
        basis.eval(x, out.values.data());
    }
    return out;
}

Matrix feature_outer(const FeatureBasis& basis, double x) {
    Vector v = eval_features(basis, x).values;
    return v * v.transpose();
}

}  // namespace ctt
