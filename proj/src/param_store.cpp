#include "msh/param_store.hpp"

#include <cmath>
#include <cstring>

#include "msh/errors.hpp"

namespace msh {

Tensor ParamStore::add(const std::string& name, Tensor init) {
    if (contains(name)) throw ContractError("duplicate parameter name '" + name + "'");
    init.set_requires_grad(true);
    params_.emplace(name, init);
    auto& st = adam_[name];
    st.m.assign(init.numel(), 0.0);
    st.v.assign(init.numel(), 0.0);
    return init;
}

const Tensor& ParamStore::get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ContractError("unknown parameter '" + name + "'");
    return it->second;
}

std::size_t ParamStore::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : params_) n += t.numel();
    return n;
}

void ParamStore::zero_grad() {
    for (auto& [_, t] : params_) t.zero_grad();
}

void ParamStore::allocate_grads() {
    for (auto& [_, t] : params_) t.grad_buffer();
}

std::uint64_t ParamStore::checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& [_, t] : params_) {
        for (double v : t.data()) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof bits);
            for (int b = 0; b < 8; ++b) {
                h ^= (bits >> (8 * b)) & 0xff;
                h *= 0x100000001b3ull;
            }
        }
    }
    return h;
}

std::vector<std::pair<std::string, double>> ParamStore::norms() const {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& [name, t] : params_) {
        double s = 0.0;
        for (double v : t.data()) s += v * v;
        out.emplace_back(name, std::sqrt(s));
    }
    return out;
}

ParamStore::AdamState& ParamStore::adam_state(const std::string& name) {
    auto it = adam_.find(name);
    if (it == adam_.end()) throw ContractError("unknown parameter '" + name + "'");
    return it->second;
}

void adam_step(ParamStore& store, const AdamOptions& o) {
    for (const auto& [name, param] : store) {
        if (!param.has_grad()) throw ContractError("parameter '" + name + "' has no gradient; run backward first");
    }
    for (const auto& [name, param_ref] : store) {
        Tensor param = param_ref;
        auto& st = store.adam_state(name);
        ++st.step;
        const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(st.step));
        const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(st.step));
        auto w = param.data();
        auto g = param.grad_buffer();
        for (std::size_t i = 0; i < w.size(); ++i) {
            st.m[i] = o.beta1 * st.m[i] + (1.0 - o.beta1) * g[i];
            st.v[i] = o.beta2 * st.v[i] + (1.0 - o.beta2) * g[i] * g[i];
            const double mhat = st.m[i] / bc1;
            const double vhat = st.v[i] / bc2;
            w[i] -= o.lr * mhat / (std::sqrt(vhat) + o.eps);
            g[i] = 0.0;
        }
    }
}

Tensor glorot_init(const Shape& shape, Rng& rng) {
    if (shape.size() != 2) throw ContractError("glorot_init needs a 2-D shape, got " + shape_str(shape));
    const double bound = std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
    Tensor t(shape);
    for (auto& v : t.data()) v = rng.uniform(-bound, bound);
    return t;
}

}  // namespace msh
