#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace ctt {

using Shape = std::vector<std::size_t>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

[[nodiscard]] std::size_t shape_size(const Shape& shape);

/// Dense real tensor stored row-major (last index fastest).
class DenseTensor {
public:
    DenseTensor() = default;
    explicit DenseTensor(Shape shape);
    DenseTensor(Shape shape, std::vector<double> data);

    [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t order() const noexcept { return shape_.size(); }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] std::size_t dim(std::size_t k) const { return shape_.at(k); }

    [[nodiscard]] double* data() noexcept { return data_.data(); }
    [[nodiscard]] const double* data() const noexcept { return data_.data(); }
    [[nodiscard]] std::vector<double>& values() noexcept { return data_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return data_; }

    [[nodiscard]] std::size_t offset(std::span<const std::size_t> index) const;
    [[nodiscard]] double& operator()(std::span<const std::size_t> index) { return data_[offset(index)]; }
    [[nodiscard]] double operator()(std::span<const std::size_t> index) const { return data_[offset(index)]; }
    [[nodiscard]] double& at(std::initializer_list<std::size_t> index);
    [[nodiscard]] double at(std::initializer_list<std::size_t> index) const;

    [[nodiscard]] DenseTensor reshaped(Shape shape) const;
    [[nodiscard]] double norm() const;
    [[nodiscard]] bool all_finite() const;

    /// Row-major view with the first `k` modes fused into rows.
    [[nodiscard]] Eigen::Map<const RowMatrix> as_matrix(std::size_t k) const;
    [[nodiscard]] Eigen::Map<RowMatrix> as_matrix(std::size_t k);

    DenseTensor& operator*=(double s);
    DenseTensor& operator+=(const DenseTensor& other);

private:
    Shape shape_;
    std::vector<double> data_;
};

/// Unfolding with the first k modes as rows (big-endian index fusion).
[[nodiscard]] Matrix unfold(const DenseTensor& t, std::size_t k);
[[nodiscard]] DenseTensor fold(const Matrix& m, Shape shape);

[[nodiscard]] double frobenius_inner(const DenseTensor& a, const DenseTensor& b);

struct SvdPolicy {
    enum class Kind { max_rank, tolerance };
    Kind kind = Kind::tolerance;
    std::size_t rank = 0;
    double tolerance = 0.0;

    static SvdPolicy max_rank(std::size_t r) { return {Kind::max_rank, r, 0.0}; }
    static SvdPolicy absolute(double tau) { return {Kind::tolerance, 0, tau}; }
};

struct SvdResult {
    Matrix U;
    Vector sigma;
    Matrix V;
    double error = 0.0;  // Frobenius norm of the discarded part

    [[nodiscard]] std::size_t rank() const { return static_cast<std::size_t>(sigma.size()); }
};

/// Relative threshold below which singular values count as zero.
inline constexpr double k_rank_threshold = 1e-14;

[[nodiscard]] std::size_t numerical_rank(const Vector& sigma, double rel = k_rank_threshold);
[[nodiscard]] std::size_t matrix_rank(const Matrix& m, double rel = k_rank_threshold);

/// Full thin SVD, singular values non-increasing.
[[nodiscard]] SvdResult full_svd(const Matrix& m);

/// Truncated SVD. At least one singular triple is always kept so factors are
/// never empty; numerically zero values (below k_rank_threshold * sigma_1) are
/// always dropped.
[[nodiscard]] SvdResult truncated_svd(const Matrix& m, const SvdPolicy& policy);

}  // namespace ctt
