#include "msh/msh_layer.hpp"

#include <algorithm>
#include <cmath>

#include "msh/errors.hpp"
#include "msh/ops.hpp"

namespace msh {

std::string to_string(FrequencyMode mode) {
    switch (mode) {
        case FrequencyMode::none: return "none";
        case FrequencyMode::single: return "single";
        case FrequencyMode::linear: return "linear";
        case FrequencyMode::exponential: return "exponential";
        case FrequencyMode::learned: return "learned";
    }
    return "?";
}

FrequencyMode parse_frequency_mode(const std::string& name) {
    for (auto m : {FrequencyMode::none, FrequencyMode::single, FrequencyMode::linear, FrequencyMode::exponential,
                   FrequencyMode::learned}) {
        if (to_string(m) == name) return m;
    }
    throw ContractError("unknown frequency mode '" + name + "' (expected none, single, linear, exponential, learned)");
}

HarmonicSpec HarmonicSpec::for_mode(FrequencyMode mode, std::size_t K) {
    HarmonicSpec s;
    s.mode = mode;
    s.frequencies.clear();
    switch (mode) {
        case FrequencyMode::none: break;
        case FrequencyMode::single: s.frequencies = {1.0}; break;
        case FrequencyMode::linear:
            for (std::size_t k = 1; k <= K; ++k) s.frequencies.push_back(static_cast<double>(k));
            break;
        case FrequencyMode::exponential:
        case FrequencyMode::learned:
            for (std::size_t k = 0; k < K; ++k) s.frequencies.push_back(std::ldexp(1.0, static_cast<int>(k)));
            break;
    }
    return s;
}

void HarmonicSpec::validate() const {
    if (mode == FrequencyMode::none) return;
    if (frequencies.empty()) throw ContractError("frequency mode '" + to_string(mode) + "' needs at least one frequency");
    for (std::size_t i = 0; i < frequencies.size(); ++i) {
        if (!(frequencies[i] > 0.0)) {
            throw ContractError("frequencies must be positive, got " + std::to_string(frequencies[i]));
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (frequencies[i] == frequencies[j]) {
                throw ContractError("frequencies must be distinct, " + std::to_string(frequencies[i]) + " repeats");
            }
        }
    }
}

// Init gain on W_o.
constexpr double kMessageGain = 0.3;

MshLayerParams MshLayerParams::init(std::size_t d, std::size_t F, const HarmonicSpec& spec, Rng& rng,
                                    ParamStore* store, const std::string& prefix) {
    spec.validate();
    if (d == 0 || F == 0) throw ContractError("layer extents d and F must be positive");
    MshLayerParams p;
    p.d = d;
    p.F = F;
    p.W_f = glorot_init({d, F * d}, rng);
    p.b_f = Tensor({F * d});
    p.W_phi = glorot_init({d, F}, rng);
    p.b_phi = Tensor({F});
    p.W_o = glorot_init({spec.code_width(F), d}, rng);
    for (auto& v : p.W_o.data()) v *= kMessageGain;
    p.W_u1 = glorot_init({d, d}, rng);
    p.b_u1 = Tensor({d});
    p.W_u2 = glorot_init({d, d}, rng);
    p.b_u2 = Tensor({d});
    p.freqs = Tensor::vector(spec.mode == FrequencyMode::none ? std::vector<double>{} : spec.frequencies);
    if (store) {
        store->add(prefix + "W_f", p.W_f);
        store->add(prefix + "b_f", p.b_f);
        store->add(prefix + "W_phi", p.W_phi);
        store->add(prefix + "b_phi", p.b_phi);
        store->add(prefix + "W_o", p.W_o);
        store->add(prefix + "W_u1", p.W_u1);
        store->add(prefix + "b_u1", p.b_u1);
        store->add(prefix + "W_u2", p.W_u2);
        store->add(prefix + "b_u2", p.b_u2);
        if (spec.mode == FrequencyMode::learned) store->add(prefix + "freqs", p.freqs);
    }
    return p;
}

std::size_t MshLayerParams::parameter_count(std::size_t d, std::size_t F, const HarmonicSpec& spec) {
    std::size_t n = d * F * d + F * d + d * F + F + spec.code_width(F) * d + 2 * (d * d + d);
    if (spec.mode == FrequencyMode::learned) n += spec.frequencies.size();
    return n;
}

namespace {

Tensor as_row(const Tensor& v, std::size_t d, const char* what) {
    if (v.numel() != d) {
        throw DimensionError(std::string(what) + ": expected extent " + std::to_string(d) + ", got " +
                             shape_str(v.shape()));
    }
    return ops::reshape(v, {1, d});
}

}  // namespace

Projection generate_projection(const Tensor& h_v, const MshLayerParams& params) {
    const Tensor row = as_row(h_v, params.d, "generate_projection");
    Projection out;
    out.matrix = ops::reshape(ops::add_row(ops::matmul(row, params.W_f), params.b_f), {params.F, params.d});
    out.phase = ops::reshape(ops::add_row(ops::matmul(row, params.W_phi), params.b_phi), {params.F});
    return out;
}

Tensor project(const Projection& proj, const Tensor& h_u) {
    if (proj.matrix.dim() != 2 || proj.phase.numel() != proj.matrix.shape()[0]) {
        throw DimensionError("project: projection " + shape_str(proj.matrix.shape()) + " with phase " +
                             shape_str(proj.phase.shape()));
    }
    const std::size_t F = proj.matrix.shape()[0], d = proj.matrix.shape()[1];
    if (h_u.numel() != d) {
        throw DimensionError("project: projection " + shape_str(proj.matrix.shape()) + " vs source " +
                             shape_str(h_u.shape()));
    }
    const Tensor col = ops::reshape(h_u, {d, 1});
    return ops::add(ops::reshape(ops::matmul(proj.matrix, col), {F}), ops::reshape(proj.phase, {F}));
}

Tensor ablation_encode(const Tensor& p, const HarmonicSpec& spec, const Tensor& freqs) {
    if (spec.mode == FrequencyMode::none) return p;
    spec.validate();
    const Tensor w = freqs.numel() > 0 ? freqs : Tensor::vector(spec.frequencies);
    if (p.dim() == 2) return ops::harmonic_encode(p, w);
    const std::size_t F = p.numel();
    const Tensor code = ops::harmonic_encode(ops::reshape(p, {1, F}), w);
    return ops::reshape(code, {code.numel()});
}

Tensor harmonic_encode(const Tensor& p, const HarmonicSpec& spec) {
    if (spec.mode == FrequencyMode::none || spec.frequencies.empty()) {
        throw ContractError("harmonic_encode needs at least one frequency");
    }
    return ablation_encode(p, spec);
}

Tensor edge_message(const Tensor& h_v, const Tensor& h_u, const MshLayerParams& params, const HarmonicSpec& spec) {
    const Tensor p = project(generate_projection(h_v, params), h_u);
    const Tensor code = ablation_encode(p, spec, params.freqs);
    if (params.W_o.shape()[0] != code.numel()) {
        throw DimensionError("edge_message: code " + shape_str(code.shape()) + " vs W_o " +
                             shape_str(params.W_o.shape()));
    }
    return ops::reshape(ops::matmul(ops::reshape(code, {1, code.numel()}), params.W_o), {params.d});
}

LayerOutput forward_layer(const GraphBatch& batch, const Tensor& features, const MshLayerParams& params,
                          const HarmonicSpec& spec, double dropout_rate, bool training, Rng& rng) {
    if (features.dim() != 2 || features.shape()[0] != batch.num_nodes || features.shape()[1] != params.d) {
        throw DimensionError("forward_layer: features " + shape_str(features.shape()) + " for " +
                             std::to_string(batch.num_nodes) + " nodes of width " + std::to_string(params.d));
    }
    const Tensor fflat = ops::add_row(ops::matmul(features, params.W_f), params.b_f);
    const Tensor phi = ops::add_row(ops::matmul(features, params.W_phi), params.b_phi);
    const Tensor p = ops::add(ops::edge_project(fflat, features, batch.src, batch.dst, params.F),
                              ops::gather_rows(phi, batch.dst));
    const Tensor psi = ops::matmul(ablation_encode(p, spec, params.freqs), params.W_o);
    const Tensor m = ops::segment_sum(psi, batch.dst);
    const Tensor hidden = ops::relu(ops::add_row(ops::matmul(ops::add(features, m), params.W_u1), params.b_u1));
    const Tensor out = ops::add_row(ops::matmul(hidden, params.W_u2), params.b_u2);
    return {ops::dropout(out, dropout_rate, rng, training), psi};
}

}  // namespace msh
