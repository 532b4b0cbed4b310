#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "msh/graph.hpp"
#include "msh/param_store.hpp"
#include "msh/rng.hpp"
#include "msh/tensor.hpp"

namespace msh {

enum class FrequencyMode { none, single, linear, exponential, learned };

std::string to_string(FrequencyMode mode);
/// Throws ContractError for an unknown name.
FrequencyMode parse_frequency_mode(const std::string& name);

/// Modulation frequencies and the schedule that produced them.
struct HarmonicSpec {
    FrequencyMode mode = FrequencyMode::exponential;
    std::vector<double> frequencies{1.0, 2.0, 4.0};

    /// none: {}; single: {1}; linear: {1..K}; exponential and learned: {1, 2, .., 2^(K-1)}.
    static HarmonicSpec for_mode(FrequencyMode mode, std::size_t K = 3);

    std::size_t num_frequencies() const { return mode == FrequencyMode::none ? 0 : frequencies.size(); }
    /// Width of the code fed to W_o: 2FK, or F when the encoding is bypassed.
    std::size_t code_width(std::size_t F) const { return mode == FrequencyMode::none ? F : 2 * F * frequencies.size(); }
    /// Frequencies must be non-empty (unless mode is none), positive and distinct.
    void validate() const;
};

/// Learnable tensors of one layer, stored input-major: a product X W maps rows
/// of X. Row f of node v's projection matrix is fflat[v, f*d .. f*d + d).
struct MshLayerParams {
    std::size_t d = 0;
    std::size_t F = 0;
    Tensor W_f;    // [d x F*d]
    Tensor b_f;    // [F*d]
    Tensor W_phi;  // [d x F]
    Tensor b_phi;  // [F]
    Tensor W_o;    // [code_width x d], no bias
    Tensor W_u1;   // [d x d]
    Tensor b_u1;   // [d]
    Tensor W_u2;   // [d x d]
    Tensor b_u2;   // [d]
    Tensor freqs;  // [K]; a registered parameter only in learned mode

    /// Glorot weights (W_o scaled by 0.3), zero biases. Registers every tensor under `prefix`
    /// when a store is given.
    static MshLayerParams init(std::size_t d, std::size_t F, const HarmonicSpec& spec, Rng& rng,
                               ParamStore* store = nullptr, const std::string& prefix = "");

    static std::size_t parameter_count(std::size_t d, std::size_t F, const HarmonicSpec& spec);
};

struct Projection {
    Tensor matrix;  // F_v [F x d]
    Tensor phase;   // phi_v [F]
};

/// F_v = reshape(W_f h_v + b_f), phi_v = W_phi h_v + b_phi.
Projection generate_projection(const Tensor& h_v, const MshLayerParams& params);
/// p_vu = F_v h_u + phi_v.
Tensor project(const Projection& proj, const Tensor& h_u);
/// [sin(w_1 p) | cos(w_1 p) | sin(w_2 p) | ...] for a vector p [F].
Tensor harmonic_encode(const Tensor& p, const HarmonicSpec& spec);
/// Encoding of a vector or an [E x F] matrix under the given mode; mode none
/// passes p through. `freqs` overrides spec.frequencies (learned mode).
Tensor ablation_encode(const Tensor& p, const HarmonicSpec& spec, const Tensor& freqs = Tensor());
/// Psi_vu = W_o^T harmonic_encode(project(generate_projection(h_v), h_u)).
Tensor edge_message(const Tensor& h_v, const Tensor& h_u, const MshLayerParams& params, const HarmonicSpec& spec);

struct LayerOutput {
    Tensor features;       // [N x d]
    Tensor edge_messages;  // [E x d]
};

/// One message-passing step over every edge of the batch:
/// m_v = sum of Psi over incoming edges, h_v' = dropout(MLP(h_v + m_v)).
LayerOutput forward_layer(const GraphBatch& batch, const Tensor& features, const MshLayerParams& params,
                          const HarmonicSpec& spec, double dropout_rate, bool training, Rng& rng);

}  // namespace msh
