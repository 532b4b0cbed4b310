#include "msh/readout.hpp"

#include "msh/errors.hpp"
#include "msh/ops.hpp"

namespace msh {

std::string to_string(SigmaMode mode) { return mode == SigmaMode::softmax ? "softmax" : "sigmoid"; }

std::string to_string(PoolingMode mode) {
    switch (mode) {
        case PoolingMode::attention: return "attention";
        case PoolingMode::mean: return "mean";
        case PoolingMode::sum: return "sum";
        case PoolingMode::max: return "max";
    }
    return "?";
}

SigmaMode parse_sigma_mode(const std::string& name) {
    if (name == "softmax") return SigmaMode::softmax;
    if (name == "sigmoid") return SigmaMode::sigmoid;
    throw ContractError("unknown sigma mode '" + name + "' (expected softmax, sigmoid)");
}

PoolingMode parse_pooling_mode(const std::string& name) {
    for (auto m : {PoolingMode::attention, PoolingMode::mean, PoolingMode::sum, PoolingMode::max})
        if (to_string(m) == name) return m;
    throw ContractError("unknown pooling mode '" + name + "' (expected attention, mean, sum, max)");
}

Classifier Classifier::init(std::size_t d, std::size_t head, std::size_t classes, Rng& rng, ParamStore* store,
                            const std::string& prefix) {
    if (d == 0 || classes == 0) throw ContractError("classifier extents must be positive");
    Classifier c;
    c.head = head;
    const std::size_t first_out = head ? head : classes;
    c.W1 = glorot_init({d, first_out}, rng);
    c.b1 = Tensor({first_out});
    if (head) {
        c.W2 = glorot_init({head, classes}, rng);
        c.b2 = Tensor({classes});
    }
    if (store) {
        store->add(prefix + "W1", c.W1);
        store->add(prefix + "b1", c.b1);
        if (head) {
            store->add(prefix + "W2", c.W2);
            store->add(prefix + "b2", c.b2);
        }
    }
    return c;
}

std::size_t Classifier::parameter_count(std::size_t d, std::size_t head, std::size_t classes) {
    return head ? d * head + head + head * classes + classes : d * classes + classes;
}

Tensor Classifier::apply(const Tensor& x) const {
    if (x.dim() != 2 || x.shape()[1] != W1.shape()[0]) {
        throw DimensionError("classifier: input " + shape_str(x.shape()) + " vs weight " + shape_str(W1.shape()));
    }
    Tensor y = ops::add_row(ops::matmul(x, W1), b1);
    if (!head) return y;
    return ops::add_row(ops::matmul(ops::relu(y), W2), b2);
}

ReadoutParams ReadoutParams::init(std::size_t d, std::size_t layers, Rng& rng, ParamStore* store,
                                  const std::string& prefix) {
    if (layers == 0) throw ContractError("readout needs at least one layer");
    ReadoutParams r;
    r.W_1 = glorot_init({d, 1}, rng);
    r.W_2 = glorot_init({d, d}, rng);
    r.w = Tensor({layers}, 1.0 / static_cast<double>(layers));
    if (store) {
        store->add(prefix + "W_1", r.W_1);
        store->add(prefix + "W_2", r.W_2);
        store->add(prefix + "w", r.w);
    }
    return r;
}

Tensor attention_pool(const Tensor& edge_messages, const SegmentsPtr& dst, const ReadoutParams& params,
                      SigmaMode sigma, Tensor* attention) {
    if (edge_messages.dim() != 2 || edge_messages.shape()[1] != params.W_2.shape()[0]) {
        throw DimensionError("attention_pool: messages " + shape_str(edge_messages.shape()) + " vs W_2 " +
                             shape_str(params.W_2.shape()));
    }
    const Tensor scores = ops::matmul(edge_messages, params.W_1);
    const Tensor alpha = sigma == SigmaMode::softmax ? ops::segment_softmax(scores, dst) : ops::sigmoid(scores);
    if (attention) *attention = alpha;
    return ops::segment_sum(ops::scale_rows(ops::matmul(edge_messages, params.W_2), alpha), dst);
}

namespace {

void require_nonempty(const GraphBatch& batch) {
    for (std::size_t g = 0; g < batch.num_graphs; ++g) {
        if (batch.nodes_in(g) == 0) throw ContractError("graph " + std::to_string(g) + " of the batch has no nodes");
    }
}

void require_rows(const char* op, const Tensor& x, const GraphBatch& batch) {
    if (x.dim() != 2 || x.shape()[0] != batch.num_nodes) {
        throw DimensionError(std::string(op) + ": " + shape_str(x.shape()) + " for " +
                             std::to_string(batch.num_nodes) + " nodes");
    }
}

}  // namespace

Tensor graph_embed(const Tensor& g, const GraphBatch& batch) {
    require_rows("graph_embed", g, batch);
    require_nonempty(batch);
    return ops::segment_mean(g, batch.by_graph);
}

Tensor fuse_layers(const std::vector<Tensor>& per_layer, const Tensor& w) {
    if (per_layer.size() != w.numel()) {
        throw DimensionError("fuse_layers: " + std::to_string(per_layer.size()) + " layers but " +
                             std::to_string(w.numel()) + " weights");
    }
    return ops::weighted_sum(per_layer, w);
}

Tensor simple_pool(const Tensor& node_features, const GraphBatch& batch, PoolingMode kind) {
    require_rows("simple_pool", node_features, batch);
    require_nonempty(batch);
    switch (kind) {
        case PoolingMode::mean: return ops::segment_mean(node_features, batch.by_graph);
        case PoolingMode::sum: return ops::segment_sum(node_features, batch.by_graph);
        case PoolingMode::max: return ops::segment_max(node_features, batch.by_graph);
        case PoolingMode::attention: break;
    }
    throw ContractError("simple_pool supports mean, sum and max");
}

Tensor node_head(const Tensor& node_features, const Classifier& classifier) { return classifier.apply(node_features); }

}  // namespace msh
