#include "msh/model.hpp"

#include "msh/errors.hpp"
#include "msh/ops.hpp"

namespace msh {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::msh: return "msh";
        case ModelKind::gcn: return "gcn";
        case ModelKind::gat: return "gat";
    }
    return "?";
}

ModelKind parse_model_kind(const std::string& name) {
    for (auto k : {ModelKind::msh, ModelKind::gcn, ModelKind::gat})
        if (to_string(k) == name) return k;
    throw ContractError("unknown model '" + name + "' (expected msh, gcn, gat)");
}

namespace {

std::string layer_prefix(const char* kind, std::size_t l) { return std::string(kind) + std::to_string(l) + "."; }

}  // namespace

Model::Model(const ModelConfig& config, std::uint64_t seed) : config_(config) {
    if (config.layers == 0 || config.hidden == 0 || config.in_dim == 0) {
        throw ContractError("layers, hidden and in_dim must be positive");
    }
    Rng rng = Rng::derive(seed, 0x696e6974);
    const std::size_t h = config.hidden;
    switch (config.kind) {
        case ModelKind::msh:
            enc_W_ = store_.add("enc.W", glorot_init({config.in_dim, h}, rng));
            enc_b_ = store_.add("enc.b", Tensor({h}));
            for (std::size_t l = 0; l < config.layers; ++l)
                msh_.push_back(
                    MshLayerParams::init(h, config.proj_dim, config.harmonic, rng, &store_, layer_prefix("msh", l)));
            if (config.pooling == PoolingMode::attention) readout_ = ReadoutParams::init(h, config.layers, rng, &store_);
            break;
        case ModelKind::gcn:
            for (std::size_t l = 0; l < config.layers; ++l)
                gcn_.push_back(GcnParams::init(l ? h : config.in_dim, h, rng, &store_, layer_prefix("gcn", l)));
            break;
        case ModelKind::gat:
            for (std::size_t l = 0; l < config.layers; ++l)
                gat_.push_back(GatParams::init(l ? h : config.in_dim, h, rng, &store_, layer_prefix("gat", l)));
            break;
    }
    classifier_ = Classifier::init(h, config.head, config.num_classes, rng, &store_);
}

std::size_t Model::parameter_count(const ModelConfig& c) {
    const std::size_t h = c.hidden;
    std::size_t n = Classifier::parameter_count(h, c.head, c.num_classes);
    switch (c.kind) {
        case ModelKind::msh:
            n += c.in_dim * h + h + c.layers * MshLayerParams::parameter_count(h, c.proj_dim, c.harmonic);
            if (c.pooling == PoolingMode::attention) n += ReadoutParams::parameter_count(h, c.layers);
            break;
        case ModelKind::gcn:
            for (std::size_t l = 0; l < c.layers; ++l) n += GcnParams::parameter_count(l ? h : c.in_dim, h);
            break;
        case ModelKind::gat:
            for (std::size_t l = 0; l < c.layers; ++l) n += GatParams::parameter_count(l ? h : c.in_dim, h);
            break;
    }
    return n;
}

ModelOutput Model::forward(const GraphBatch& batch, bool training, Rng& dropout_rng) const {
    if (batch.features.dim() != 2 || batch.features.shape()[1] != config_.in_dim) {
        throw DimensionError("model expects features of width " + std::to_string(config_.in_dim) + ", got " +
                             shape_str(batch.features.shape()));
    }
    ModelOutput out;
    Tensor h = batch.features;
    const PoolingMode pool = config_.pooling == PoolingMode::attention && config_.kind != ModelKind::msh
                                 ? PoolingMode::mean
                                 : config_.pooling;
    if (config_.kind == ModelKind::msh) {
        h = ops::add_row(ops::matmul(h, enc_W_), enc_b_);
        std::vector<Tensor> per_layer;
        for (const auto& layer : msh_) {
            auto r = forward_layer(batch, h, layer, config_.harmonic, config_.dropout, training, dropout_rng);
            h = r.features;
            if (pool == PoolingMode::attention)
                per_layer.push_back(graph_embed(attention_pool(r.edge_messages, batch.dst, readout_, config_.sigma), batch));
        }
        out.embedding = pool == PoolingMode::attention ? fuse_layers(per_layer, readout_.w) : simple_pool(h, batch, pool);
    } else {
        for (std::size_t l = 0; l < config_.layers; ++l) {
            h = config_.kind == ModelKind::gcn ? gcn_layer(batch, h, gcn_[l]) : gat_layer(batch, h, gat_[l]);
            h = ops::dropout(h, config_.dropout, dropout_rng, training);
        }
        out.embedding = simple_pool(h, batch, pool);
    }
    out.node_features = h;
    out.logits = classifier_.apply(out.embedding);
    return out;
}

ModelOutput Model::forward(const GraphBatch& batch) const {
    Rng unused(0);
    return forward(batch, false, unused);
}

}  // namespace msh
