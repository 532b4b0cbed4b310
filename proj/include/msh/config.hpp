#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "msh/model.hpp"
#include "msh/synthetic.hpp"

namespace msh {

/// Bad configuration key or value; the CLI maps it to exit code 1.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Every tunable of a run. Defaults: 3 layers, hidden 64, head 16, F 16,
/// lr 0.001, dropout 0.1, 200 epochs, batch size 32.
struct RunConfig {
    std::string task = "synthetic";
    std::string model = "msh";
    std::size_t layers = 3;
    std::size_t hidden = 64;
    std::size_t head = 16;
    std::size_t proj_dim = 16;
    std::string freq_mode = "exponential";
    std::size_t num_frequencies = 3;
    std::string frequencies;  // explicit comma list, overrides the schedule
    std::string pooling = "attention";
    std::string sigma = "softmax";
    double lr = 0.001;
    double dropout = 0.1;
    std::size_t epochs = 200;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    std::size_t patience = 0;  // 0 disables early stopping

    std::string dataset = "synthetic";  // "synthetic" or a TU directory
    std::string dataset_name = "MUTAG";
    std::size_t graphs_per_class = 100;
    std::size_t n_min = 20;
    std::size_t n_max = 50;
    double rewire = 0.2;
    double test_fraction = 0.2;
    std::size_t folds = 10;

    std::string models = "msh,gcn,gat";
    std::size_t budget_msh = 7300;
    std::size_t budget_gcn = 6200;
    std::size_t budget_gat = 6500;
    double budget_tolerance = 0.15;

    std::string ablate_freq = "none,single,linear,exponential,learned";
    std::string ablate_pool = "attention,mean,sum,max";

    std::string scaling_sizes = "128,256,512,1024";
    std::size_t scaling_repeats = 5;
    std::size_t scaling_warmup = 2;

    std::size_t jobs = 1;
    std::size_t threads = 0;  // 0 keeps the OpenMP default
    std::string out = "out";

    HarmonicSpec harmonic() const;
    ModelConfig model_config(ModelKind kind, std::size_t in_dim, std::size_t num_classes) const;
    SyntheticSpec synthetic_spec() const;
    /// Cross-field checks (positive extents, ranges, parsable mode names).
    void validate() const;
};

/// One config key: name, help text, and string conversions.
struct ConfigKey {
    std::string name;
    std::string help;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

const std::vector<ConfigKey>& config_keys();

/// Sets one key from its text form; ConfigError for unknown keys or bad values.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

/// Applies a flat `key = value` file (`#` starts a comment).
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

/// Every key with its current value, in key order.
std::map<std::string, std::string> config_echo(const RunConfig& config);

std::vector<std::string> split_list(const std::string& text);

}  // namespace msh
