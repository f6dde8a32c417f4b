#include "ctt/dense_tensor.hpp"

#include "ctt/error.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace ctt {

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

namespace {

void check_shape(const Shape& shape) {
    for (auto n : shape) require(n > 0, "tensor modes must be positive");
}

std::size_t rows_of(const Shape& shape, std::size_t k) {
    std::size_t r = 1;
    for (std::size_t i = 0; i < k; ++i) r *= shape[i];
    return r;
}

}  // namespace

DenseTensor::DenseTensor(Shape shape) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(shape_size(shape_), 0.0);
}

DenseTensor::DenseTensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    require(data_.size() == shape_size(shape_), "data length does not match shape");
    if (!all_finite()) throw NumericalError("non-finite entry in tensor data");
}

std::size_t DenseTensor::offset(std::span<const std::size_t> index) const {
    require(index.size() == shape_.size(), "index order mismatch");
    std::size_t off = 0;
    for (std::size_t k = 0; k < shape_.size(); ++k) {
        if (index[k] >= shape_[k]) argument_error("index out of range");
        off = off * shape_[k] + index[k];
    }
    return off;
}

double& DenseTensor::at(std::initializer_list<std::size_t> index) {
    return data_[offset(std::span<const std::size_t>(index.begin(), index.size()))];
}

double DenseTensor::at(std::initializer_list<std::size_t> index) const {
    return data_[offset(std::span<const std::size_t>(index.begin(), index.size()))];
}

DenseTensor DenseTensor::reshaped(Shape shape) const {
    require(shape_size(shape) == size(), "reshape changes size");
    DenseTensor out;
    out.shape_ = std::move(shape);
    out.data_ = data_;
    return out;
}

double DenseTensor::norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
}

bool DenseTensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

Eigen::Map<const RowMatrix> DenseTensor::as_matrix(std::size_t k) const {
    require(k <= order(), "split position out of range");
    auto r = rows_of(shape_, k);
    return {data_.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(size() / r)};
}

Eigen::Map<RowMatrix> DenseTensor::as_matrix(std::size_t k) {
    require(k <= order(), "split position out of range");
    auto r = rows_of(shape_, k);
    return {data_.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(size() / r)};
}

DenseTensor& DenseTensor::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

DenseTensor& DenseTensor::operator+=(const DenseTensor& other) {
    require(other.shape_ == shape_, "shape mismatch in tensor addition");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Matrix unfold(const DenseTensor& t, std::size_t k) {
    if (k < 1 || k >= t.order()) argument_error("unfold: split position must satisfy 1 <= k < order");
    return Matrix(t.as_matrix(k));
}

DenseTensor fold(const Matrix& m, Shape shape) {
    require(static_cast<std::size_t>(m.size()) == shape_size(shape), "fold: size mismatch");
    std::size_t r = 0, k = 0;
    for (r = 1; k < shape.size() && r < static_cast<std::size_t>(m.rows()); ++k) r *= shape[k];
    require(r == static_cast<std::size_t>(m.rows()), "fold: rows do not match a mode split");
    DenseTensor out(std::move(shape));
    out.as_matrix(k) = m;
    return out;
}

double frobenius_inner(const DenseTensor& a, const DenseTensor& b) {
    require(a.shape() == b.shape(), "frobenius_inner: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
    return s;
}

std::size_t numerical_rank(const Vector& sigma, double rel) {
    if (sigma.size() == 0 || sigma(0) <= 0.0) return 0;
    std::size_t r = 0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
        if (sigma(i) > rel * sigma(0)) ++r;
    return r;
}

std::size_t matrix_rank(const Matrix& m, double rel) {
    return numerical_rank(full_svd(m).sigma, rel);
}

SvdResult full_svd(const Matrix& m) {
    if (!m.allFinite()) {
        std::ostringstream os;
        os << "SVD input has non-finite entries (" << m.rows() << "x" << m.cols() << ")";
        throw NumericalError(os.str());
    }
    const bool wide = m.cols() > m.rows();
    Eigen::BDCSVD<Matrix> svd(wide ? Matrix(m.transpose()) : m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) {
        std::ostringstream os;
        os << "SVD did not converge for a " << m.rows() << "x" << m.cols() << " matrix";
        throw NumericalError(os.str());
    }
    SvdResult out;
    out.sigma = svd.singularValues();
    out.U = wide ? svd.matrixV() : svd.matrixU();
    out.V = wide ? svd.matrixU() : svd.matrixV();
    return out;
}

SvdResult truncated_svd(const Matrix& m, const SvdPolicy& policy) {
    SvdResult full = full_svd(m);
    const auto n = static_cast<std::size_t>(full.sigma.size());
    if (n == 0) return full;

    std::size_t keep = std::max<std::size_t>(1, numerical_rank(full.sigma));
    // tail[i] = squared norm of sigma_i, sigma_{i+1}, ...
    std::vector<double> tail(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;) tail[i] = tail[i + 1] + full.sigma(i) * full.sigma(i);

    if (policy.kind == SvdPolicy::Kind::max_rank) {
        keep = std::max<std::size_t>(1, std::min(keep, policy.rank));
    } else {
        const double tau2 = policy.tolerance * policy.tolerance;
        std::size_t r = 1;
        while (r < keep && tail[r] > tau2) ++r;
        keep = r;
    }

    SvdResult out;
    out.U = full.U.leftCols(keep);
    out.V = full.V.leftCols(keep);
    out.sigma = full.sigma.head(keep);
    out.error = std::sqrt(tail[keep]);
    return out;
}

}  // namespace ctt
