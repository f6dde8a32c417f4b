#pragma once

// Layerwise compression of a CTT with a guaranteed relative L2 accuracy.

#include "ctt/model.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace ctt {

struct LayerStats {
    std::size_t samples = 0;
    double M_state = 0.0;          // RMS of ||u_L||
    double M_output = 0.0;         // RMS of ||g(x)||
    std::vector<double> phi_norm;  // j = 1..L: sqrt(mean ||Phi(u_{j-1})||^2), full feature tensor
    std::vector<double> lip_psi;   // max ||D psi_k(u_{k-1})||_2
    std::vector<double> lip_flow;  // max ||I + D psi_k(u_{k-1})||_2
};

[[nodiscard]] LayerStats estimate_layer_stats(const CTTModel& model, const Matrix& samples,
                                              std::size_t min_samples = 100);

/// Drops singular values below delta / sqrt((d-1) m_k) in a left-to-right sweep
/// (m_k = largest possible rank of unfolding k), so ||a - result||_F <= delta.
[[nodiscard]] TTTensor truncate_to_tolerance(const TTTensor& a, double delta);

struct LayerCompression {
    std::size_t layer = 0;  // 1-based
    double delta = 0.0;
    double achieved = 0.0;  // ||psi_j - psi~_j||_F
    double phi_norm = 0.0;
    double lip_psi = 0.0;
    double lip_flow = 0.0;  // of the compressed layer
    std::vector<std::size_t> old_ranks, new_ranks;
    std::size_t old_params = 0, new_params = 0;
    bool copied = false;
};

struct CompressionReport {
    double eps = 0.0;
    std::size_t samples = 0;
    double M_state = 0.0, M_output = 0.0;
    double bound = 0.0;           // sum_j achieved_j ||Phi||_j prod_{k>j} Lip(I + psi~_k)
    double measured_error = 0.0;  // ||g - g~|| / ||g|| on the samples
    std::vector<LayerCompression> layers;
    std::vector<std::string> warnings;
};

struct CompressionResult {
    CTTModel model;
    CompressionReport report;
};

/// Layers are processed from L down to 1; every budget uses the already
/// compressed later layers.
[[nodiscard]] CompressionResult compress(const CTTModel& model, double eps, const Matrix& samples,
                                         std::size_t min_samples = 100);

/// layer,delta,achieved,phi_norm,lip_psi,lip_flow,old_ranks,new_ranks,old_params,new_params,copied
void write_compression_csv(std::ostream& os, const CompressionReport& r);
void write_compression_json(std::ostream& os, const CompressionReport& r);

}  // namespace ctt
