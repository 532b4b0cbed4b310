#include "msh/tensor.hpp"

#include <sstream>

#include "msh/errors.hpp"

namespace msh {

namespace {
thread_local Tape* g_active_tape = nullptr;
}

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto e : shape) n *= e;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor() : impl_(std::make_shared<TensorImpl>()) { impl_->shape = {0}; }

Tensor::Tensor(Shape shape, double fill) : impl_(std::make_shared<TensorImpl>()) {
    impl_->data.assign(shape_numel(shape), fill);
    impl_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : impl_(std::make_shared<TensorImpl>()) {
    if (shape_numel(shape) != data.size()) {
        throw DimensionError("tensor shape " + shape_str(shape) + " does not match " +
                             std::to_string(data.size()) + " values");
    }
    impl_->shape = std::move(shape);
    impl_->data = std::move(data);
}

Tensor Tensor::scalar(double value) { return Tensor({1}, std::vector<double>{value}); }

Tensor Tensor::vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw DimensionError("ragged matrix literal");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
    return Tensor({rows, cols}, std::move(data));
}

std::size_t Tensor::rows() const { return impl_->shape.empty() ? 1 : impl_->shape[0]; }

std::size_t Tensor::cols() const {
    std::size_t c = 1;
    for (std::size_t i = 1; i < impl_->shape.size(); ++i) c *= impl_->shape[i];
    return c;
}

double Tensor::item() const {
    if (numel() != 1) throw ContractError("item() on tensor of shape " + shape_str(shape()));
    return impl_->data[0];
}

Tensor& Tensor::set_requires_grad(bool on) {
    if (!impl_->is_leaf) throw ContractError("requires_grad can only be set on leaf tensors");
    impl_->requires_grad = on;
    return *this;
}

std::vector<double> Tensor::grad() const {
    if (impl_->grad.empty()) return std::vector<double>(numel(), 0.0);
    return impl_->grad;
}

std::span<double> Tensor::grad_buffer() {
    if (impl_->grad.size() != numel()) impl_->grad.assign(numel(), 0.0);
    return impl_->grad;
}

void Tensor::zero_grad() {
    for (auto& g : impl_->grad) g = 0.0;
}

Tensor Tensor::detach() const { return Tensor(impl_->shape, impl_->data); }

void Tape::record(std::vector<Tensor> inputs, const Tensor& output, BackwardFn fn) {
    Entry e;
    e.inputs.reserve(inputs.size());
    for (auto& t : inputs) e.inputs.push_back(t.shared());
    e.output = output.shared();
    e.output->requires_grad = true;
    e.output->is_leaf = false;
    e.output->producer = this;
    e.fn = std::move(fn);
    entries_.push_back(std::move(e));
}

void Tape::backward(const Tensor& loss) {
    if (loss.numel() != 1) {
        throw ContractError("backward requires a scalar loss, got shape " + shape_str(loss.shape()));
    }
    TensorImpl* root = loss.impl();
    if (!root->requires_grad) return;
    if (root->is_leaf) {
        if (root->grad.size() != 1) root->grad.assign(1, 0.0);
        root->grad[0] += 1.0;
        return;
    }
    if (root->producer != this) throw ContractError("loss was not recorded on this tape");

    root->pending.assign(1, 1.0);
    std::vector<std::span<double>> grad_in;
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
        TensorImpl* out = it->output.get();
        if (out->pending.empty()) continue;
        grad_in.clear();
        for (const auto& in : it->inputs) {
            if (!in->requires_grad) {
                grad_in.emplace_back();
            } else if (in->is_leaf) {
                if (in->grad.size() != in->data.size()) in->grad.assign(in->data.size(), 0.0);
                grad_in.emplace_back(in->grad);
            } else {
                if (in->pending.size() != in->data.size()) in->pending.assign(in->data.size(), 0.0);
                grad_in.emplace_back(in->pending);
            }
        }
        it->fn(out->pending, grad_in);
        std::vector<double>().swap(out->pending);
    }
    for (auto& e : entries_) {
        for (auto& in : e.inputs) {
            if (!in->pending.empty()) std::vector<double>().swap(in->pending);
        }
    }
}

Tape* Tape::active() { return g_active_tape; }

Tape::Scope::Scope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
Tape::Scope::~Scope() { g_active_tape = previous_; }

Tape::NoGrad::NoGrad() : previous_(g_active_tape) { g_active_tape = nullptr; }
Tape::NoGrad::~NoGrad() { g_active_tape = previous_; }

void backward(const Tensor& loss) {
    Tape* tape = Tape::active();
    if (!tape) {
        if (loss.requires_grad() && !loss.is_leaf()) throw ContractError("backward called with no active tape");
        Tape scratch;
        scratch.backward(loss);
        return;
    }
    tape->backward(loss);
}

}  // namespace msh
