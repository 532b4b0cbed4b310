#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "msh/baselines.hpp"
#include "msh/graph.hpp"
#include "msh/msh_layer.hpp"
#include "msh/param_store.hpp"
#include "msh/readout.hpp"

namespace msh {

enum class ModelKind { msh, gcn, gat };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

struct ModelConfig {
    ModelKind kind = ModelKind::msh;
    std::size_t in_dim = 1;
    std::size_t num_classes = 2;
    std::size_t hidden = 64;
    std::size_t head = 16;
    std::size_t layers = 3;
    std::size_t proj_dim = 16;  // F
    HarmonicSpec harmonic;
    PoolingMode pooling = PoolingMode::attention;  // baselines read attention as mean
    SigmaMode sigma = SigmaMode::softmax;
    double dropout = 0.1;
};

struct ModelOutput {
    Tensor node_features;  // [N x hidden] after the last layer
    Tensor embedding;      // [num_graphs x hidden]
    Tensor logits;         // [num_graphs x classes]
};

/// Graph classifier: message-passing stack, graph readout, classifier head.
///
/// msh: input encoder X W_in + b_in, then MSH layers; readout is the fused
/// attention pooling over every layer's edge messages, or a simple pool of the
/// last layer's node features.
/// gcn / gat: layers in -> hidden -> ... -> hidden, mean pooling.
class Model {
public:
    Model(const ModelConfig& config, std::uint64_t seed);

    ModelOutput forward(const GraphBatch& batch, bool training, Rng& dropout_rng) const;
    /// Eval-mode forward (no dropout).
    ModelOutput forward(const GraphBatch& batch) const;

    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }
    const ModelConfig& config() const { return config_; }

    /// Closed-form parameter count; equals params().parameter_count().
    static std::size_t parameter_count(const ModelConfig& config);

private:
    ModelConfig config_;
    ParamStore store_;
    Tensor enc_W_, enc_b_;
    std::vector<MshLayerParams> msh_;
    ReadoutParams readout_;
    std::vector<GcnParams> gcn_;
    std::vector<GatParams> gat_;
    Classifier classifier_;
};

}  // namespace msh
