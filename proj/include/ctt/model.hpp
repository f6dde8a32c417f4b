#pragma once

#include "ctt/basis.hpp"
#include "ctt/tt.hpp"

#include <filesystem>
#include <iosfwd>
#include <variant>
#include <vector>

namespace ctt {

/// Linear (or affine, for unit_first) embedding R^d -> R^p: x -> M x + c.
struct Lift {
    enum class Kind { identity, zero_pad, first_slot_zero, unit_first, custom };
    Kind kind = Kind::identity;
    Matrix matrix;  // p x d
    Vector offset;  // length p

    static Lift identity(std::size_t d);
    /// x -> (x, 0, ..., 0) in R^p.
    static Lift zero_pad(std::size_t d, std::size_t p);
    /// x -> (0, x, 0, ..., 0) in R^p (p defaults to d + 1).
    static Lift first_slot_zero(std::size_t d, std::size_t p = 0);
    /// x -> (1, x, 0, ..., 0) in R^p (p defaults to d + 1).
    static Lift unit_first(std::size_t d, std::size_t p = 0);
    static Lift custom(Matrix m, Vector c);

    [[nodiscard]] std::size_t input_dim() const { return static_cast<std::size_t>(matrix.cols()); }
    [[nodiscard]] std::size_t output_dim() const { return static_cast<std::size_t>(matrix.rows()); }
    [[nodiscard]] Vector apply(const Vector& x) const;
};

/// Coordinate projector R^p -> R^{d_o}, output o reads state slot slots[o].
struct Retraction {
    std::vector<std::size_t> slots;
    std::size_t width = 0;

    static Retraction first_slots(std::size_t d_o, std::size_t p);
    static Retraction select(std::vector<std::size_t> slots, std::size_t p);

    [[nodiscard]] std::size_t output_dim() const { return slots.size(); }
    [[nodiscard]] Vector apply(const Vector& h) const;
    [[nodiscard]] Matrix matrix() const;
};

/// Residual layer psi(h)_j = <coef(j, ...), Phi(h_1) (x) ... (x) Phi(h_p)>.
/// Dense coefficients have shape (p, n, ..., n); TT coefficients have p modes
/// of size n and r_0 = p.
class CTTLayer {
public:
    CTTLayer() = default;
    explicit CTTLayer(DenseTensor coef);
    explicit CTTLayer(TTTensor coef);

    [[nodiscard]] bool is_tt() const { return std::holds_alternative<TTTensor>(coef_); }
    [[nodiscard]] const DenseTensor& dense() const { return std::get<DenseTensor>(coef_); }
    [[nodiscard]] DenseTensor& dense() { return std::get<DenseTensor>(coef_); }
    [[nodiscard]] const TTTensor& tt() const { return std::get<TTTensor>(coef_); }
    [[nodiscard]] TTTensor& tt() { return std::get<TTTensor>(coef_); }

    [[nodiscard]] std::size_t width() const;
    [[nodiscard]] std::size_t basis_size() const;
    /// p * n^p.
    [[nodiscard]] std::size_t dense_size() const;
    [[nodiscard]] std::size_t parameter_count() const;

    [[nodiscard]] DenseTensor to_dense() const;
    [[nodiscard]] TTTensor to_tt(const TruncationPolicy& policy = TruncationPolicy::exact()) const;
    /// Internal TT ranks (r_1..r_{p-1}); dense layers are decomposed exactly first.
    [[nodiscard]] std::vector<std::size_t> tt_ranks() const;

private:
    std::variant<DenseTensor, TTTensor> coef_;
};

[[nodiscard]] CTTLayer zero_layer(std::size_t p, std::size_t n);

class CTTModel {
public:
    CTTModel() = default;
    CTTModel(FeatureBasis basis, Lift lift, std::vector<CTTLayer> layers, Retraction retraction);

    [[nodiscard]] const FeatureBasis& basis() const noexcept { return basis_; }
    [[nodiscard]] const Lift& lift() const noexcept { return lift_; }
    [[nodiscard]] const Retraction& retraction() const noexcept { return retraction_; }
    [[nodiscard]] const std::vector<CTTLayer>& layers() const noexcept { return layers_; }
    [[nodiscard]] std::vector<CTTLayer>& layers() noexcept { return layers_; }
    [[nodiscard]] const CTTLayer& layer(std::size_t k) const { return layers_.at(k); }
    [[nodiscard]] CTTLayer& layer(std::size_t k) { return layers_.at(k); }

    [[nodiscard]] std::size_t depth() const noexcept { return layers_.size(); }
    [[nodiscard]] std::size_t width() const { return lift_.output_dim(); }
    [[nodiscard]] std::size_t input_dim() const { return lift_.input_dim(); }
    [[nodiscard]] std::size_t output_dim() const { return retraction_.output_dim(); }

    void validate() const;
    [[nodiscard]] Vector operator()(const Vector& x) const;

private:
    FeatureBasis basis_;
    Lift lift_;
    std::vector<CTTLayer> layers_;
    Retraction retraction_;
};

[[nodiscard]] CTTModel densified(const CTTModel& m);

struct Trajectory {
    std::vector<Vector> states;  // u_0 = lift(x), ..., u_L
    Vector output;
};

/// Phi(h_1) (x) ... (x) Phi(h_p), length n^p, first mode slowest.
[[nodiscard]] Vector feature_tensor(const FeatureBasis& basis, const Vector& h);

[[nodiscard]] Vector layer_eval(const CTTLayer& layer, const FeatureBasis& basis, const Vector& h);
[[nodiscard]] Matrix layer_jacobian(const CTTLayer& layer, const FeatureBasis& basis, const Vector& h);
/// Value and Jacobian in one pass.
void layer_eval_jacobian(const CTTLayer& layer, const FeatureBasis& basis, const Vector& h, Vector& value,
                         Matrix& jac);

[[nodiscard]] Trajectory forward(const CTTModel& model, const Vector& x);

/// d u_theta / d u_l for state index l in 0..L:
/// Rmat * (I + D psi_L(u_{L-1})) * ... * (I + D psi_{l+1}(u_l)).
[[nodiscard]] Matrix state_to_output_jacobian(const CTTModel& model, const Trajectory& traj, std::size_t l);

/// d u_theta / d coef of layer l (1-based), as a d_o x (p n^p) matrix over the
/// row-major flattened dense coefficient: (S (x) F)[o, j n^p + f] = S(o,j) F(f)
/// with S = d u_theta / d u_l and F = feature_tensor(u_{l-1}).
[[nodiscard]] Matrix parameter_jacobian(const CTTModel& model, const Trajectory& traj, std::size_t l);

struct Dataset {
    Matrix x;  // B x d
    Matrix y;  // B x d_o

    [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(x.rows()); }
};

struct LossResult {
    double loss = 0.0;
    Matrix residuals;  // B x d_o, u_theta(x) - y
};

/// loss = 1/2 mean_i ||u_theta(x_i) - y_i||^2.
[[nodiscard]] LossResult loss_and_residual(const CTTModel& model, const Dataset& data);

/// sqrt(sum ||u_theta - y||^2 / sum ||y||^2).
[[nodiscard]] double relative_error(const CTTModel& model, const Dataset& data);

// Model container, see docs/formats.md.
void write_model(std::ostream& os, const CTTModel& m);
[[nodiscard]] CTTModel read_model(std::istream& is);
void save_model(const std::filesystem::path& path, const CTTModel& m);
[[nodiscard]] CTTModel load_model(const std::filesystem::path& path);

}  // namespace ctt
