#include "msh/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>

#include "msh/errors.hpp"

namespace msh {

namespace {

std::string trim(const std::string& s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T v{};
    const std::string t = trim(text);
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        throw ConfigError("invalid value '" + text + "' for key '" + key + "'");
    }
    return v;
}

std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

ConfigKey size_key(std::string name, std::string help, std::size_t RunConfig::*field) {
    return {name, std::move(help),
            [name, field](RunConfig& c, const std::string& v) { c.*field = parse_number<std::size_t>(name, v); },
            [field](const RunConfig& c) { return std::to_string(c.*field); }};
}

ConfigKey u64_key(std::string name, std::string help, std::uint64_t RunConfig::*field) {
    return {name, std::move(help),
            [name, field](RunConfig& c, const std::string& v) { c.*field = parse_number<std::uint64_t>(name, v); },
            [field](const RunConfig& c) { return std::to_string(c.*field); }};
}

ConfigKey real_key(std::string name, std::string help, double RunConfig::*field) {
    return {name, std::move(help),
            [name, field](RunConfig& c, const std::string& v) { c.*field = parse_number<double>(name, v); },
            [field](const RunConfig& c) { return format_real(c.*field); }};
}

ConfigKey text_key(std::string name, std::string help, std::string RunConfig::*field) {
    return {name, std::move(help), [field](RunConfig& c, const std::string& v) { c.*field = trim(v); },
            [field](const RunConfig& c) { return c.*field; }};
}

std::vector<ConfigKey> build_keys() {
    using C = RunConfig;
    return {
        text_key("task", "synthetic | tu | ablate | expressiveness | scaling | embed-dump", &C::task),
        text_key("model", "msh | gcn | gat", &C::model),
        size_key("layers", "message-passing layers", &C::layers),
        size_key("hidden", "hidden width d", &C::hidden),
        size_key("head", "classifier hidden width (0: single affine map)", &C::head),
        size_key("proj_dim", "projection dimension F", &C::proj_dim),
        text_key("freq_mode", "none | single | linear | exponential | learned", &C::freq_mode),
        size_key("num_frequencies", "K for the linear/exponential/learned schedules", &C::num_frequencies),
        text_key("frequencies", "explicit comma-separated frequencies (overrides the schedule)", &C::frequencies),
        text_key("pooling", "attention | mean | sum | max", &C::pooling),
        text_key("sigma", "softmax | sigmoid", &C::sigma),
        real_key("lr", "Adam learning rate", &C::lr),
        real_key("dropout", "dropout rate after each update", &C::dropout),
        size_key("epochs", "training epochs", &C::epochs),
        size_key("batch_size", "graphs per mini-batch", &C::batch_size),
        u64_key("seed", "master seed", &C::seed),
        size_key("patience", "early-stopping patience on training loss (0: off)", &C::patience),
        text_key("dataset", "'synthetic' or a TU dataset directory", &C::dataset),
        text_key("dataset_name", "TU dataset name (file prefix)", &C::dataset_name),
        size_key("graphs_per_class", "synthetic graphs per class", &C::graphs_per_class),
        size_key("n_min", "synthetic minimum node count", &C::n_min),
        size_key("n_max", "synthetic maximum node count", &C::n_max),
        real_key("rewire", "perturbed-ring rewire fraction", &C::rewire),
        real_key("test_fraction", "held-out fraction for single splits", &C::test_fraction),
        size_key("folds", "cross-validation folds", &C::folds),
        text_key("models", "models trained by the synthetic task", &C::models),
        size_key("budget_msh", "parameter target for msh (0: use hidden as given)", &C::budget_msh),
        size_key("budget_gcn", "parameter target for gcn (0: use hidden as given)", &C::budget_gcn),
        size_key("budget_gat", "parameter target for gat (0: use hidden as given)", &C::budget_gat),
        real_key("budget_tolerance", "relative tolerance of the budget search", &C::budget_tolerance),
        text_key("ablate_freq", "frequency modes crossed by the ablate task", &C::ablate_freq),
        text_key("ablate_pool", "pooling modes crossed by the ablate task", &C::ablate_pool),
        text_key("scaling_sizes", "ring sizes of the scaling probe", &C::scaling_sizes),
        size_key("scaling_repeats", "timed epochs per scaling point", &C::scaling_repeats),
        size_key("scaling_warmup", "untimed warmup epochs per scaling point", &C::scaling_warmup),
        size_key("jobs", "concurrent folds / ablation cells", &C::jobs),
        size_key("threads", "OpenMP threads per job (0: runtime default)", &C::threads),
        text_key("out", "output directory", &C::out),
    };
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = build_keys();
    return keys;
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
    for (const auto& k : config_keys()) {
        if (k.name == key) {
            k.set(config, value);
            return;
        }
    }
    throw ConfigError("unknown configuration key '" + key + "'");
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        try {
            set_config_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

std::map<std::string, std::string> config_echo(const RunConfig& config) {
    std::map<std::string, std::string> out;
    for (const auto& k : config_keys()) out[k.name] = k.get(config);
    return out;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        auto item = trim(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

HarmonicSpec RunConfig::harmonic() const {
    HarmonicSpec spec;
    try {
        spec = HarmonicSpec::for_mode(parse_frequency_mode(freq_mode), num_frequencies);
    } catch (const ContractError& e) {
        throw ConfigError(e.what());
    }
    if (!frequencies.empty() && spec.mode != FrequencyMode::none) {
        spec.frequencies.clear();
        for (const auto& f : split_list(frequencies)) spec.frequencies.push_back(parse_number<double>("frequencies", f));
    }
    try {
        spec.validate();
    } catch (const ContractError& e) {
        throw ConfigError(e.what());
    }
    return spec;
}

ModelConfig RunConfig::model_config(ModelKind kind, std::size_t in_dim, std::size_t num_classes) const {
    ModelConfig m;
    m.kind = kind;
    m.in_dim = in_dim;
    m.num_classes = num_classes;
    m.hidden = hidden;
    m.head = head;
    m.layers = layers;
    m.proj_dim = proj_dim;
    m.harmonic = harmonic();
    try {
        m.pooling = parse_pooling_mode(pooling);
        m.sigma = parse_sigma_mode(sigma);
    } catch (const ContractError& e) {
        throw ConfigError(e.what());
    }
    m.dropout = dropout;
    return m;
}

SyntheticSpec RunConfig::synthetic_spec() const {
    SyntheticSpec s;
    s.n_min = n_min;
    s.n_max = n_max;
    s.graphs_per_class = graphs_per_class;
    s.rewire = rewire;
    s.seed = seed;
    return s;
}

void RunConfig::validate() const {
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    require(layers > 0, "layers must be positive");
    require(hidden > 0, "hidden must be positive");
    require(proj_dim > 0, "proj_dim must be positive");
    require(batch_size > 0, "batch_size must be positive");
    require(lr >= 0.0, "lr must be non-negative");
    require(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
    require(test_fraction > 0.0 && test_fraction < 1.0, "test_fraction must lie in (0, 1)");
    require(folds >= 2, "folds must be at least 2");
    require(jobs >= 1, "jobs must be at least 1");
    require(budget_tolerance >= 0.0, "budget_tolerance must be non-negative");
    static const std::vector<std::string> tasks{"synthetic", "tu", "ablate", "expressiveness", "scaling", "embed-dump"};
    require(std::find(tasks.begin(), tasks.end(), task) != tasks.end(), "unknown task '" + task + "'");
    try {
        parse_model_kind(model);
        for (const auto& m : split_list(models)) parse_model_kind(m);
        for (const auto& f : split_list(ablate_freq)) parse_frequency_mode(f);
        for (const auto& p : split_list(ablate_pool)) parse_pooling_mode(p);
        parse_pooling_mode(pooling);
        parse_sigma_mode(sigma);
    } catch (const ContractError& e) {
        throw ConfigError(e.what());
    }
    harmonic();
    try {
        if (dataset == "synthetic") synthetic_spec().validate();
    } catch (const ContractError& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace msh
