#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "msh/errors.hpp"
#include "msh/graph.hpp"
#include "msh/model.hpp"

namespace msh {

struct TrainOptions {
    std::size_t epochs = 200;
    std::size_t batch_size = 32;
    double lr = 0.001;
    std::uint64_t seed = 0;
    std::size_t patience = 0;  // stop after this many epochs without a lower training loss; 0: off
};

struct EpochStats {
    std::size_t epoch = 0;
    double loss = 0.0;      // mean cross-entropy over the epoch's training graphs
    double accuracy = 0.0;  // training-mode accuracy over the same graphs
};

struct TrainResult {
    std::vector<EpochStats> history;
    double train_accuracy = 0.0;  // eval mode, after training
    double test_accuracy = 0.0;   // eval mode, after training
    double train_seconds = 0.0;
    double inference_seconds = 0.0;  // eval-mode pass over the test graphs
};

/// Raised when a loss turns non-finite. The message names the epoch, the
/// batch and every parameter norm.
class NumericFailure : public NumericError {
public:
    using NumericError::NumericError;
};

/// Mini-batch Adam on mean cross-entropy. Batches are drawn from a per-epoch
/// shuffle of `train`; dropout and shuffling use streams derived from the seed.
TrainResult train_model(Model& model, const std::vector<Graph>& data, const std::vector<std::size_t>& train,
                        const std::vector<std::size_t>& test, const TrainOptions& options);

/// Eval-mode predictions, batched.
std::vector<std::size_t> predict(const Model& model, const std::vector<Graph>& data,
                                 const std::vector<std::size_t>& indices, std::size_t batch_size);

double accuracy(const Model& model, const std::vector<Graph>& data, const std::vector<std::size_t>& indices,
                std::size_t batch_size);

/// Eval-mode graph embeddings, one row per index.
std::vector<std::vector<double>> embed(const Model& model, const std::vector<Graph>& data,
                                       const std::vector<std::size_t>& indices, std::size_t batch_size);

std::size_t argmax_row(const Tensor& logits, std::size_t row);

}  // namespace msh
