#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "msh/rng.hpp"
#include "msh/tensor.hpp"

namespace msh {

/// Named trainable tensors plus their Adam moment buffers.
/// Iteration is lexicographic by name, independent of registration order.
class ParamStore {
public:
    struct AdamState {
        std::vector<double> m;
        std::vector<double> v;
        std::uint64_t step = 0;
    };

    /// Registers `init` as a trainable leaf. Throws ContractError on a duplicate name.
    Tensor add(const std::string& name, Tensor init);
    const Tensor& get(const std::string& name) const;
    bool contains(const std::string& name) const { return params_.count(name) != 0; }
    std::size_t size() const { return params_.size(); }

    /// Total number of scalar parameters.
    std::size_t parameter_count() const;
    void zero_grad();
    /// Gives every parameter a (zero) gradient buffer, so parameters a loss
    /// does not reach still take part in the next optimizer step.
    void allocate_grads();
    /// FNV-1a over the raw bits of every parameter, in name order.
    std::uint64_t checksum() const;
    /// Euclidean norm of every parameter, in name order.
    std::vector<std::pair<std::string, double>> norms() const;

    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    AdamState& adam_state(const std::string& name);

private:
    std::map<std::string, Tensor> params_;
    std::map<std::string, AdamState> adam_;
};

struct AdamOptions {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// One bias-corrected Adam update of every parameter, then zeroes the grads.
/// Throws ContractError naming the first parameter that never received a
/// gradient.
void adam_step(ParamStore& store, const AdamOptions& options);

/// Uniform samples in +-sqrt(6 / (fan_in + fan_out)) for a [fan_in x fan_out] shape.
Tensor glorot_init(const Shape& shape, Rng& rng);

}  // namespace msh
