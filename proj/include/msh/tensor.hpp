#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace msh {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tape;

struct TensorImpl {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;     // leaves only; accumulated across backward calls
    std::vector<double> pending;  // non-leaf gradient, alive only during a reverse sweep
    bool requires_grad = false;
    bool is_leaf = true;
    const Tape* producer = nullptr;
};

/// Dense row-major array of doubles with optional gradient tracking.
///
/// Tensor is a shared handle: copies alias the same storage, which is how
/// parameters are shared between a ParamStore and the layers that use them.
/// Zero extents are permitted (a graph batch without edges yields 0 x d
/// message tensors).
class Tensor {
public:
    Tensor();
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor scalar(double value);
    static Tensor vector(std::vector<double> values);
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    const Shape& shape() const { return impl_->shape; }
    std::size_t dim() const { return impl_->shape.size(); }
    std::size_t numel() const { return impl_->data.size(); }
    std::size_t rows() const;
    /// Product of all extents after the first (1 for a 1-D tensor).
    std::size_t cols() const;

    std::span<double> data() { return impl_->data; }
    std::span<const double> data() const { return impl_->data; }
    double operator[](std::size_t i) const { return impl_->data[i]; }
    double& operator[](std::size_t i) { return impl_->data[i]; }
    double at(std::size_t r, std::size_t c) const { return impl_->data[r * cols() + c]; }
    double& at(std::size_t r, std::size_t c) { return impl_->data[r * cols() + c]; }
    double item() const;

    bool requires_grad() const { return impl_->requires_grad; }
    /// Marks a leaf as trainable. Non-leaf tensors cannot be toggled.
    Tensor& set_requires_grad(bool on);
    bool is_leaf() const { return impl_->is_leaf; }

    bool has_grad() const { return !impl_->grad.empty(); }
    /// Gradient of a leaf; all zeros when no backward pass reached it.
    std::vector<double> grad() const;
    /// Mutable gradient storage, allocated (zeroed) on first use.
    std::span<double> grad_buffer();
    void zero_grad();

    /// Untracked copy of the values.
    Tensor detach() const;

    TensorImpl* impl() const { return impl_.get(); }
    const std::shared_ptr<TensorImpl>& shared() const { return impl_; }
    bool same(const Tensor& other) const { return impl_ == other.impl_; }

private:
    std::shared_ptr<TensorImpl> impl_;
};

/// Define-by-run record of differentiable operations.
///
/// Operations append entries while a Tape is active on the current thread
/// (see Tape::Scope) and at least one input requires a gradient. Entries are
/// appended in execution order, so walking them backwards is a valid reverse
/// topological order. Clearing the tape drops every recorded intermediate;
/// leaf parameters are owned elsewhere and survive.
class Tape {
public:
    /// Adds the contribution of `grad_out` into each `grad_in[i]`. Spans for
    /// inputs that do not require a gradient are empty.
    using BackwardFn =
        std::function<void(std::span<const double> grad_out, std::span<const std::span<double>> grad_in)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    void record(std::vector<Tensor> inputs, const Tensor& output, BackwardFn fn);

    /// Accumulates d(loss)/d(leaf) into the grad buffer of every reachable
    /// trainable leaf. Throws ContractError for a non-scalar loss or a loss
    /// recorded on a different tape.
    void backward(const Tensor& loss);

    void clear() { entries_.clear(); }
    std::size_t size() const { return entries_.size(); }

    /// Tape active on this thread, or nullptr.
    static Tape* active();

    /// Activates a tape for the current thread for the lifetime of the scope.
    class Scope {
    public:
        explicit Scope(Tape& tape);
        ~Scope();
        Scope(const Scope&) = delete;
        Scope& operator=(const Scope&) = delete;

    private:
        Tape* previous_;
    };

    /// Suspends recording for the lifetime of the guard.
    class NoGrad {
    public:
        NoGrad();
        ~NoGrad();
        NoGrad(const NoGrad&) = delete;
        NoGrad& operator=(const NoGrad&) = delete;

    private:
        Tape* previous_;
    };

private:
    struct Entry {
        std::vector<std::shared_ptr<TensorImpl>> inputs;
        std::shared_ptr<TensorImpl> output;
        BackwardFn fn;
    };
    std::vector<Entry> entries_;
};

/// Reverse sweep on the tape active on this thread.
void backward(const Tensor& loss);

}  // namespace msh
