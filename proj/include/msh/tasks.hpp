#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "msh/config.hpp"
#include "msh/graph.hpp"

namespace msh {

using Json = nlohmann::json;

/// Deterministic run summary (report.json) plus wall-clock measurements kept
/// apart (timing.json) so that reports of repeated runs compare byte for byte.
struct TaskOutput {
    Json report;
    Json timing;
};

/// Synthetic graphs or a TU directory, per config.dataset.
std::vector<Graph> load_dataset(const RunConfig& config);

/// Hidden width for `kind`: the configured width, or the budget-matched one
/// when the model's budget key is non-zero.
std::size_t choose_hidden(const RunConfig& config, ModelKind kind, std::size_t in_dim, std::size_t num_classes);

TaskOutput run_synthetic(const RunConfig& config);
TaskOutput run_tu_cv(const RunConfig& config);
/// Also writes ablation.csv into config.out.
TaskOutput run_ablation(const RunConfig& config);
TaskOutput run_expressiveness(const RunConfig& config);
TaskOutput run_scaling(const RunConfig& config);
/// Also writes embeddings.csv into config.out.
TaskOutput run_embed_dump(const RunConfig& config);

/// Runs config.task and writes report.json and timing.json into config.out;
/// the expressiveness task also writes expressiveness.json.
TaskOutput execute(const RunConfig& config);

/// Runs fn(0..count-1) on up to `jobs` threads; rethrows the exception of the
/// lowest failing index.
void run_jobs(std::size_t jobs, std::size_t count, const std::function<void(std::size_t)>& fn);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // population
};
MeanStd mean_std(const std::vector<double>& values);

void write_json(const std::filesystem::path& path, const Json& value);

}  // namespace msh
