#include "msh/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <span>
#include <string>

#include "msh/ops.hpp"
#include "msh/param_store.hpp"

namespace msh {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

[[noreturn]] void numeric_abort(const Model& model, std::size_t epoch, std::size_t batch, double loss) {
    std::string msg = "non-finite loss " + std::to_string(loss) + " at epoch " + std::to_string(epoch) + ", batch " +
                      std::to_string(batch) + "; parameter norms:";
    char buf[64];
    for (const auto& [name, norm] : model.params().norms()) {
        std::snprintf(buf, sizeof buf, " %s=%.6g", name.c_str(), norm);
        msg += buf;
    }
    throw NumericFailure(msg);
}

template <typename Fn>
void for_each_batch(const std::vector<std::size_t>& indices, std::size_t batch_size, Fn fn) {
    for (std::size_t begin = 0, b = 0; begin < indices.size(); begin += batch_size, ++b) {
        const std::size_t end = std::min(indices.size(), begin + batch_size);
        fn(b, std::span<const std::size_t>(indices.data() + begin, end - begin));
    }
}

}  // namespace

std::size_t argmax_row(const Tensor& logits, std::size_t row) {
    const std::size_t c = logits.cols();
    std::size_t best = 0;
    for (std::size_t j = 1; j < c; ++j)
        if (logits.at(row, j) > logits.at(row, best)) best = j;
    return best;
}

TrainResult train_model(Model& model, const std::vector<Graph>& data, const std::vector<std::size_t>& train,
                        const std::vector<std::size_t>& test, const TrainOptions& options) {
    if (train.empty()) throw ContractError("training set is empty");
    if (options.batch_size == 0) throw ContractError("batch size must be positive");
    TrainResult result;
    Rng shuffle_rng = Rng::derive(options.seed, 0x73687566);
    Rng dropout_rng = Rng::derive(options.seed, 0x64726f70);
    AdamOptions adam;
    adam.lr = options.lr;
    std::vector<std::size_t> order = train;
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t stale = 0;
    const auto t0 = Clock::now();
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for_each_batch(order, options.batch_size, [&](std::size_t b, std::span<const std::size_t> idx) {
            const GraphBatch gb = batch_indices(data, idx);
            Tape tape;
            Tape::Scope scope(tape);
            const auto out = model.forward(gb, true, dropout_rng);
            const Tensor loss = ops::cross_entropy(out.logits, gb.labels);
            if (!std::isfinite(loss.item())) numeric_abort(model, epoch, b, loss.item());
            model.params().allocate_grads();
            tape.backward(loss);
            adam_step(model.params(), adam);
            loss_sum += loss.item() * static_cast<double>(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) correct += argmax_row(out.logits, i) == gb.labels[i];
        });
        const double n = static_cast<double>(order.size());
        result.history.push_back({epoch, loss_sum / n, static_cast<double>(correct) / n});
        if (options.patience > 0) {
            if (loss_sum / n < best_loss) {
                best_loss = loss_sum / n;
                stale = 0;
            } else if (++stale >= options.patience) {
                break;
            }
        }
    }
    result.train_seconds = seconds_since(t0);
    result.train_accuracy = accuracy(model, data, train, options.batch_size);
    const auto t1 = Clock::now();
    result.test_accuracy = test.empty() ? 0.0 : accuracy(model, data, test, options.batch_size);
    result.inference_seconds = seconds_since(t1);
    return result;
}

std::vector<std::size_t> predict(const Model& model, const std::vector<Graph>& data,
                                 const std::vector<std::size_t>& indices, std::size_t batch_size) {
    std::vector<std::size_t> out;
    Tape::NoGrad guard;
    for_each_batch(indices, batch_size, [&](std::size_t, std::span<const std::size_t> idx) {
        const auto r = model.forward(batch_indices(data, idx));
        for (std::size_t i = 0; i < idx.size(); ++i) out.push_back(argmax_row(r.logits, i));
    });
    return out;
}

double accuracy(const Model& model, const std::vector<Graph>& data, const std::vector<std::size_t>& indices,
                std::size_t batch_size) {
    if (indices.empty()) return 0.0;
    const auto pred = predict(model, data, indices, batch_size);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < indices.size(); ++i) correct += pred[i] == data[indices[i]].graph_label.value();
    return static_cast<double>(correct) / static_cast<double>(indices.size());
}

std::vector<std::vector<double>> embed(const Model& model, const std::vector<Graph>& data,
                                       const std::vector<std::size_t>& indices, std::size_t batch_size) {
    std::vector<std::vector<double>> out;
    Tape::NoGrad guard;
    for_each_batch(indices, batch_size, [&](std::size_t, std::span<const std::size_t> idx) {
        const auto r = model.forward(batch_indices(data, idx));
        const std::size_t d = r.embedding.cols();
        for (std::size_t i = 0; i < idx.size(); ++i)
            out.emplace_back(r.embedding.data().begin() + i * d, r.embedding.data().begin() + (i + 1) * d);
    });
    return out;
}

}  // namespace msh
