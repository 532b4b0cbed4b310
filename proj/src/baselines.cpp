#include "msh/baselines.hpp"

#include <cmath>

#include "msh/errors.hpp"
#include "msh/ops.hpp"

namespace msh {

GcnParams GcnParams::init(std::size_t in, std::size_t out, Rng& rng, ParamStore* store, const std::string& prefix) {
    GcnParams p{glorot_init({in, out}, rng), Tensor({out})};
    if (store) {
        store->add(prefix + "W", p.W);
        store->add(prefix + "b", p.b);
    }
    return p;
}

GatParams GatParams::init(std::size_t in, std::size_t out, Rng& rng, ParamStore* store, const std::string& prefix) {
    GatParams p;
    p.W = glorot_init({in, out}, rng);
    p.a = ops::reshape(glorot_init({2 * out, 1}, rng), {2 * out}).detach();
    p.b = Tensor({out});
    if (store) {
        store->add(prefix + "W", p.W);
        store->add(prefix + "a", p.a);
        store->add(prefix + "b", p.b);
    }
    return p;
}

namespace {

void check_input(const char* op, const GraphBatch& batch, const Tensor& x, const Tensor& W) {
    if (x.dim() != 2 || x.shape()[0] != batch.num_nodes || x.shape()[1] != W.shape()[0]) {
        throw DimensionError(std::string(op) + ": features " + shape_str(x.shape()) + " vs weight " +
                             shape_str(W.shape()) + " on " + std::to_string(batch.num_nodes) + " nodes");
    }
}

}  // namespace

Tensor gcn_layer(const GraphBatch& batch, const Tensor& features, const GcnParams& params) {
    check_input("gcn_layer", batch, features, params.W);
    const Tensor z = ops::matmul(features, params.W);
    const Tensor msg = ops::scale_rows(ops::gather_rows(z, batch.loop_src), batch.gcn_norm);
    return ops::relu(ops::add_row(ops::segment_sum(msg, batch.loop_dst), params.b));
}

Tensor gat_layer(const GraphBatch& batch, const Tensor& features, const GatParams& params, bool activate,
                 Tensor* attention) {
    check_input("gat_layer", batch, features, params.W);
    const std::size_t out = params.W.shape()[1];
    if (params.a.numel() != 2 * out) {
        throw DimensionError("gat_layer: attention vector " + shape_str(params.a.shape()) + " vs output extent " +
                             std::to_string(out));
    }
    const Tensor z = ops::matmul(features, params.W);
    const Tensor a_dst = ops::reshape(ops::slice_rows(params.a, 0, out), {out, 1});
    const Tensor a_src = ops::reshape(ops::slice_rows(params.a, out, 2 * out), {out, 1});
    const Tensor score = ops::add(ops::gather_rows(ops::matmul(z, a_dst), batch.loop_dst),
                                  ops::gather_rows(ops::matmul(z, a_src), batch.loop_src));
    const Tensor alpha = ops::segment_softmax(ops::leaky_relu(score, params.slope), batch.loop_dst);
    if (attention) *attention = alpha;
    const Tensor agg = ops::segment_sum(ops::scale_rows(ops::gather_rows(z, batch.loop_src), alpha), batch.loop_dst);
    const Tensor y = ops::add_row(agg, params.b);
    return activate ? ops::relu(y) : y;
}

std::size_t match_param_budget(const std::function<std::size_t(std::size_t)>& count, std::size_t target,
                               double tolerance, std::size_t min_width, std::size_t max_width) {
    if (min_width == 0 || min_width > max_width) throw ContractError("invalid width range for budget search");
    std::size_t best = min_width;
    double best_err = std::abs(static_cast<double>(count(min_width)) - static_cast<double>(target));
    for (std::size_t w = min_width + 1; w <= max_width; ++w) {
        const double err = std::abs(static_cast<double>(count(w)) - static_cast<double>(target));
        if (err < best_err) {
            best = w;
            best_err = err;
        }
    }
    if (best_err > tolerance * static_cast<double>(target)) {
        throw ContractError("parameter budget " + std::to_string(target) + " infeasible: closest width " +
                            std::to_string(best) + " gives " + std::to_string(count(best)) + " parameters");
    }
    return best;
}

}  // namespace msh
