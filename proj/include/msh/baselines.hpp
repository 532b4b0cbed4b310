#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "msh/graph.hpp"
#include "msh/param_store.hpp"
#include "msh/rng.hpp"
#include "msh/tensor.hpp"

namespace msh {

/// One GCN layer: relu(D~^-1/2 A~ D~^-1/2 X W + b) with A~ = A + I.
struct GcnParams {
    Tensor W;  // [d x d']
    Tensor b;  // [d']

    static GcnParams init(std::size_t in, std::size_t out, Rng& rng, ParamStore* store = nullptr,
                          const std::string& prefix = "");
    static std::size_t parameter_count(std::size_t in, std::size_t out) { return in * out + out; }
};

/// One single-head GAT layer. The attention vector a is [a_dst | a_src], each
/// of extent d'.
struct GatParams {
    Tensor W;  // [d x d']
    Tensor a;  // [2d']
    Tensor b;  // [d']
    double slope = 0.2;

    static GatParams init(std::size_t in, std::size_t out, Rng& rng, ParamStore* store = nullptr,
                          const std::string& prefix = "");
    static std::size_t parameter_count(std::size_t in, std::size_t out) { return in * out + 3 * out; }
};

Tensor gcn_layer(const GraphBatch& batch, const Tensor& features, const GcnParams& params);

/// e_vu = leaky_relu(a^T [W h_v | W h_u]) over incoming edges plus the self
/// loop, alpha = per-destination softmax, h_v' = sum alpha_vu W h_u + b,
/// followed by relu when `activate`. `attention` receives alpha in the order
/// of the batch's looped edge list (edges, then one loop per node).
Tensor gat_layer(const GraphBatch& batch, const Tensor& features, const GatParams& params, bool activate = true,
                 Tensor* attention = nullptr);

/// Smallest-error width in [min_width, max_width] for a parameter-count
/// function; ties go to the smaller width. Throws ContractError when the best
/// count is further than `tolerance` (relative) from the target.
std::size_t match_param_budget(const std::function<std::size_t(std::size_t)>& count, std::size_t target,
                               double tolerance = 0.15, std::size_t min_width = 1, std::size_t max_width = 512);

}  // namespace msh
