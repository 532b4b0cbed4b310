#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "msh/graph.hpp"
#include "msh/param_store.hpp"
#include "msh/rng.hpp"
#include "msh/segments.hpp"
#include "msh/tensor.hpp"

namespace msh {

enum class SigmaMode { softmax, sigmoid };
enum class PoolingMode { attention, mean, sum, max };

std::string to_string(SigmaMode mode);
std::string to_string(PoolingMode mode);
SigmaMode parse_sigma_mode(const std::string& name);
PoolingMode parse_pooling_mode(const std::string& name);

/// Affine map d -> classes, or d -> head -> classes with a rectifier when
/// head > 0.
struct Classifier {
    Tensor W1, b1, W2, b2;
    std::size_t head = 0;

    static Classifier init(std::size_t d, std::size_t head, std::size_t classes, Rng& rng, ParamStore* store = nullptr,
                           const std::string& prefix = "cls.");
    static std::size_t parameter_count(std::size_t d, std::size_t head, std::size_t classes);
    Tensor apply(const Tensor& x) const;
    std::size_t num_classes() const { return head ? b2.numel() : b1.numel(); }
};

/// Attention scorer and message transform shared across layers, plus one
/// fusion weight per layer (initialized to 1/L).
struct ReadoutParams {
    Tensor W_1;  // [d x 1]
    Tensor W_2;  // [d x d]
    Tensor w;    // [L]

    static ReadoutParams init(std::size_t d, std::size_t layers, Rng& rng, ParamStore* store = nullptr,
                              const std::string& prefix = "readout.");
    static std::size_t parameter_count(std::size_t d, std::size_t layers) { return d + d * d + layers; }
};

/// alpha_e = sigma(Psi_e W_1), normalized per destination under softmax;
/// g_v = sum over incoming edges of alpha_e (Psi_e W_2). Returns the
/// per-node pooled rows and optionally the attention weights.
Tensor attention_pool(const Tensor& edge_messages, const SegmentsPtr& dst, const ReadoutParams& params,
                      SigmaMode sigma, Tensor* attention = nullptr);

/// Per-graph mean over that graph's own nodes. Throws ContractError for a
/// graph with zero nodes.
Tensor graph_embed(const Tensor& g, const GraphBatch& batch);

/// sum_l w[l] * per_layer[l].
Tensor fuse_layers(const std::vector<Tensor>& per_layer, const Tensor& w);

/// Per-graph mean, sum or max of node features.
Tensor simple_pool(const Tensor& node_features, const GraphBatch& batch, PoolingMode kind);

/// Classifier applied to every node row.
Tensor node_head(const Tensor& node_features, const Classifier& classifier);

}  // namespace msh
