#include "ctt/kernels.hpp"

#include "ctt/error.hpp"

#include <omp.h>

namespace ctt {

int max_threads() { return omp_get_max_threads(); }

namespace {

template <class F>
void for_each_index(std::size_t count, Exec exec, F&& f) {
    const auto n = static_cast<std::ptrdiff_t>(count);
    if (exec == Exec::serial) {
        for (std::ptrdiff_t i = 0; i < n; ++i) f(static_cast<std::size_t>(i));
        return;
    }
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) f(static_cast<std::size_t>(i));
}

}  // namespace

BatchForward forward_batch(const CTTModel& model, const Matrix& x, bool with_jacobians, Exec exec) {
    require(static_cast<std::size_t>(x.cols()) == model.input_dim(), "forward_batch: input dimension mismatch");
    const auto b = static_cast<std::size_t>(x.rows());
    const auto p = static_cast<Eigen::Index>(model.width());
    const auto depth = model.depth();
    BatchForward fw;
    fw.states.assign(depth + 1, Matrix(static_cast<Eigen::Index>(b), p));
    if (with_jacobians) fw.layer_jac.assign(depth, std::vector<Matrix>(b));
    fw.output.resize(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(model.output_dim()));
    const Matrix rmat = model.retraction().matrix();
    for_each_index(b, exec, [&](std::size_t i) {
        const auto row = static_cast<Eigen::Index>(i);
        Vector u = model.lift().apply(x.row(row).transpose());
        fw.states[0].row(row) = u.transpose();
        Vector v;
        for (std::size_t k = 0; k < depth; ++k) {
            if (with_jacobians) {
                layer_eval_jacobian(model.layer(k), model.basis(), u, v, fw.layer_jac[k][i]);
            } else {
                v = layer_eval(model.layer(k), model.basis(), u);
            }
            u += v;
            fw.states[k + 1].row(row) = u.transpose();
        }
        fw.output.row(row) = (rmat * u).transpose();
    });
    return fw;
}

std::vector<Matrix> output_sensitivities(const CTTModel& model, const BatchForward& fw, std::size_t l, Exec exec) {
    require(l <= model.depth(), "state index out of range");
    require(fw.layer_jac.size() == model.depth(), "output_sensitivities needs layer Jacobians");
    const auto b = fw.batch();
    std::vector<Matrix> out(b);
    const Matrix rmat = model.retraction().matrix();
    for_each_index(b, exec, [&](std::size_t i) {
        Matrix s = rmat;
        for (std::size_t k = model.depth(); k > l; --k) s += s * fw.layer_jac[k - 1][i];
        out[i] = std::move(s);
    });
    return out;
}

Matrix feature_batch(const FeatureBasis& basis, const Matrix& states, Exec exec) {
    const auto b = static_cast<std::size_t>(states.rows());
    Eigen::Index m = 1;
    for (Eigen::Index k = 0; k < states.cols(); ++k) m *= static_cast<Eigen::Index>(basis.size());
    Matrix f(static_cast<Eigen::Index>(b), m);
    for_each_index(b, exec, [&](std::size_t i) {
        const auto row = static_cast<Eigen::Index>(i);
        f.row(row) = feature_tensor(basis, states.row(row).transpose()).transpose();
    });
    return f;
}

Matrix parameter_jacobian_batch(const CTTModel& model, const BatchForward& fw, std::size_t l, Exec exec) {
    require(l >= 1 && l <= model.depth(), "layer index must be in 1..L");
    const auto sens = output_sensitivities(model, fw, l, exec);
    const Matrix f = feature_batch(model.basis(), fw.states[l - 1], exec);
    const auto b = fw.batch();
    const auto d_o = static_cast<Eigen::Index>(model.output_dim());
    const auto p = static_cast<Eigen::Index>(model.width());
    const auto m = f.cols();
    Matrix j(static_cast<Eigen::Index>(b) * d_o, p * m);
    for_each_index(b, exec, [&](std::size_t i) {
        const auto row = static_cast<Eigen::Index>(i);
        for (Eigen::Index o = 0; o < d_o; ++o)
            for (Eigen::Index a = 0; a < p; ++a)
                j.row(row * d_o + o).segment(a * m, m) = sens[i](o, a) * f.row(row);
    });
    return j;
}

Matrix gram_from_jacobian(const Matrix& jac, std::size_t batch, Exec exec) {
    require(batch > 0, "gram_from_jacobian: empty batch");
    const auto n = static_cast<std::size_t>(jac.cols());
    Matrix g(jac.cols(), jac.cols());
    const double inv = 1.0 / static_cast<double>(batch);
    for_each_index(n, exec, [&](std::size_t a) {
        const auto ca = static_cast<Eigen::Index>(a);
        for (Eigen::Index cb = ca; cb < jac.cols(); ++cb) {
            const double v = jac.col(ca).dot(jac.col(cb)) * inv;
            g(ca, cb) = v;
            g(cb, ca) = v;
        }
    });
    return g;
}

Vector gradient_from_jacobian(const Matrix& jac, const Vector& residual, std::size_t batch, Exec exec) {
    require(batch > 0, "gradient_from_jacobian: empty batch");
    require(residual.size() == jac.rows(), "gradient_from_jacobian: residual length mismatch");
    Vector g(jac.cols());
    const double inv = 1.0 / static_cast<double>(batch);
    for_each_index(static_cast<std::size_t>(jac.cols()), exec, [&](std::size_t a) {
        const auto ca = static_cast<Eigen::Index>(a);
        g(ca) = jac.col(ca).dot(residual) * inv;
    });
    return g;
}

Vector flatten_rows(const Matrix& m) {
    Vector v(m.size());
    for (Eigen::Index i = 0; i < m.rows(); ++i) v.segment(i * m.cols(), m.cols()) = m.row(i).transpose();
    return v;
}

}  // namespace ctt
