#include "msh/tasks.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <thread>

#include "msh/errors.hpp"
#include "msh/expressiveness.hpp"
#include "msh/kernels.hpp"
#include "msh/ops.hpp"
#include "msh/train.hpp"
#include "msh/tu_dataset.hpp"

namespace msh {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

Json echo_json(const RunConfig& config) {
    Json j = Json::object();
    for (const auto& [k, v] : config_echo(config))
        if (k != "out") j[k] = v;
    return j;
}

TrainOptions train_options(const RunConfig& c, std::uint64_t seed) {
    TrainOptions o;
    o.epochs = c.epochs;
    o.batch_size = c.batch_size;
    o.lr = c.lr;
    o.seed = seed;
    o.patience = c.patience;
    return o;
}

Json history_json(const std::vector<EpochStats>& history) {
    Json arr = Json::array();
    for (const auto& e : history) arr.push_back({{"epoch", e.epoch}, {"loss", e.loss}, {"accuracy", e.accuracy}});
    return arr;
}

std::size_t recount(const ParamStore& store) {
    std::size_t n = 0;
    for (const auto& [_, t] : store) n += shape_numel(t.shape());
    return n;
}

std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

void apply_threads(const RunConfig& c) {
    if (c.threads > 0) kernels::parallel::set_num_threads(static_cast<int>(c.threads));
}

struct SplitData {
    std::vector<Graph> graphs;
    std::vector<std::size_t> train, test;
    std::size_t in_dim = 0, classes = 0;
};

SplitData split_data(const RunConfig& c) {
    SplitData s;
    s.graphs = load_dataset(c);
    if (s.graphs.empty()) throw DataError("dataset is empty");
    std::tie(s.train, s.test) = stratified_split(graph_labels(s.graphs), c.test_fraction, c.seed);
    s.in_dim = s.graphs[0].feature_dim();
    s.classes = num_classes(s.graphs);
    return s;
}

struct ModelRun {
    Json report;
    Json timing;
};

ModelRun train_one(const RunConfig& c, const SplitData& data, ModelKind kind, const ModelConfig& mc,
                   std::uint64_t seed) {
    Model model(mc, seed);
    const auto r = train_model(model, data.graphs, data.train, data.test, train_options(c, seed));
    ModelRun run;
    run.report = {{"model", to_string(kind)},
                  {"hidden", mc.hidden},
                  {"parameter_count", Model::parameter_count(mc)},
                  {"parameter_recount", recount(model.params())},
                  {"train_accuracy", r.train_accuracy},
                  {"test_accuracy", r.test_accuracy},
                  {"epochs", history_json(r.history)}};
    run.timing = {{"model", to_string(kind)},
                  {"train_seconds", r.train_seconds},
                  {"inference_seconds", r.inference_seconds},
                  {"inference_ms_per_graph",
                   data.test.empty() ? 0.0 : 1000.0 * r.inference_seconds / static_cast<double>(data.test.size())}};
    return run;
}

}  // namespace

std::vector<Graph> load_dataset(const RunConfig& c) {
    if (c.dataset == "synthetic") return generate_dataset(c.synthetic_spec());
    return load_tu_dataset(c.dataset, c.dataset_name);
}

std::size_t choose_hidden(const RunConfig& c, ModelKind kind, std::size_t in_dim, std::size_t num_classes) {
    const std::size_t target = kind == ModelKind::msh ? c.budget_msh : kind == ModelKind::gcn ? c.budget_gcn : c.budget_gat;
    if (target == 0) return c.hidden;
    ModelConfig mc = c.model_config(kind, in_dim, num_classes);
    return match_param_budget(
        [&](std::size_t w) {
            mc.hidden = w;
            return Model::parameter_count(mc);
        },
        target, c.budget_tolerance);
}

void run_jobs(std::size_t jobs, std::size_t count, const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(count);
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < std::min(jobs, count); ++t) {
            pool.emplace_back([&] {
                for (std::size_t i; (i = next++) < count;) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

MeanStd mean_std(const std::vector<double>& v) {
    MeanStd r;
    if (v.empty()) return r;
    for (double x : v) r.mean += x;
    r.mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(v.size()));
    return r;
}

void write_json(const fs::path& path, const Json& value) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << value.dump(2) << '\n';
}

TaskOutput run_synthetic(const RunConfig& c) {
    const SplitData data = split_data(c);
    const auto kinds = split_list(c.models);
    std::vector<ModelRun> runs(kinds.size());
    run_jobs(c.jobs, kinds.size(), [&](std::size_t i) {
        const ModelKind kind = parse_model_kind(kinds[i]);
        ModelConfig mc = c.model_config(kind, data.in_dim, data.classes);
        mc.hidden = choose_hidden(c, kind, data.in_dim, data.classes);
        runs[i] = train_one(c, data, kind, mc, Rng::derive(c.seed, 100 + i).next_u64());
    });
    TaskOutput out;
    out.report = {{"task", "synthetic"},
                  {"seed", c.seed},
                  {"config", echo_json(c)},
                  {"num_graphs", data.graphs.size()},
                  {"num_train", data.train.size()},
                  {"num_test", data.test.size()},
                  {"num_classes", data.classes},
                  {"models", Json::array()}};
    out.timing = {{"task", "synthetic"}, {"models", Json::array()}};
    for (auto& r : runs) {
        out.report["models"].push_back(r.report);
        out.timing["models"].push_back(r.timing);
    }
    return out;
}

TaskOutput run_tu_cv(const RunConfig& c) {
    const auto graphs = load_dataset(c);
    if (graphs.empty()) throw DataError("dataset is empty");
    const auto labels = graph_labels(graphs);
    const auto split = stratified_kfold(labels, c.folds, c.seed);
    const ModelKind kind = parse_model_kind(c.model);
    const std::size_t in_dim = graphs[0].feature_dim(), classes = num_classes(graphs);
    ModelConfig mc = c.model_config(kind, in_dim, classes);
    mc.hidden = c.hidden;

    struct FoldResult {
        TrainResult result;
        std::size_t recount = 0;
    };
    std::vector<FoldResult> folds(c.folds);
    run_jobs(c.jobs, c.folds, [&](std::size_t f) {
        const std::uint64_t seed = Rng::derive(c.seed, 1000 + f).next_u64();
        Model model(mc, seed);
        const auto& [train, test] = split.folds[f];
        folds[f].result = train_model(model, graphs, train, test, train_options(c, seed));
        folds[f].recount = recount(model.params());
    });

    std::size_t majority = 0;
    {
        std::vector<std::size_t> counts(classes, 0);
        for (auto l : labels) ++counts[l];
        majority = *std::max_element(counts.begin(), counts.end());
    }
    std::vector<double> accs;
    TaskOutput out;
    out.report = {{"task", "tu"},
                  {"seed", c.seed},
                  {"config", echo_json(c)},
                  {"dataset", c.dataset_name},
                  {"model", to_string(kind)},
                  {"num_graphs", graphs.size()},
                  {"num_classes", classes},
                  {"feature_dim", in_dim},
                  {"majority_baseline", static_cast<double>(majority) / static_cast<double>(graphs.size())},
                  {"parameter_count", Model::parameter_count(mc)},
                  {"folds", Json::array()}};
    out.timing = {{"task", "tu"}, {"folds", Json::array()}};
    for (std::size_t f = 0; f < c.folds; ++f) {
        const auto& r = folds[f].result;
        accs.push_back(r.test_accuracy);
        out.report["folds"].push_back({{"fold", f},
                                       {"num_test", split.folds[f].second.size()},
                                       {"parameter_recount", folds[f].recount},
                                       {"train_accuracy", r.train_accuracy},
                                       {"test_accuracy", r.test_accuracy},
                                       {"epochs", history_json(r.history)}});
        out.timing["folds"].push_back(
            {{"fold", f}, {"train_seconds", r.train_seconds}, {"inference_seconds", r.inference_seconds}});
    }
    const auto ms = mean_std(accs);
    out.report["test_accuracy_mean"] = ms.mean;
    out.report["test_accuracy_std"] = ms.std;
    return out;
}

TaskOutput run_ablation(const RunConfig& c) {
    const SplitData data = split_data(c);
    const auto freqs = split_list(c.ablate_freq);
    const auto pools = split_list(c.ablate_pool);
    struct Cell {
        RunConfig config;
        ModelRun run;
    };
    std::vector<Cell> cells;
    for (const auto& f : freqs) {
        for (const auto& p : pools) {
            RunConfig rc = c;
            rc.freq_mode = f;
            rc.pooling = p;
            cells.push_back({rc, {}});
        }
    }
    run_jobs(c.jobs, cells.size(), [&](std::size_t i) {
        const RunConfig& rc = cells[i].config;
        ModelConfig mc = rc.model_config(ModelKind::msh, data.in_dim, data.classes);
        cells[i].run = train_one(rc, data, ModelKind::msh, mc, Rng::derive(c.seed, 2000).next_u64());
    });

    fs::create_directories(c.out);
    std::ofstream csv(fs::path(c.out) / "ablation.csv");
    if (!csv) throw DataError("cannot write ablation.csv");
    const auto keys = config_echo(c);
    csv << "freq_mode,pooling,test_accuracy,train_accuracy,parameter_count";
    for (const auto& [k, _] : keys)
        if (k != "out") csv << ",cfg." << k;
    csv << '\n';
    TaskOutput out;
    out.report = {{"task", "ablate"}, {"seed", c.seed}, {"config", echo_json(c)}, {"rows", Json::array()}};
    out.timing = {{"task", "ablate"}, {"rows", Json::array()}};
    for (const auto& cell : cells) {
        const auto& r = cell.run.report;
        csv << cell.config.freq_mode << ',' << cell.config.pooling << ','
            << format_real(r["test_accuracy"].get<double>()) << ',' << format_real(r["train_accuracy"].get<double>())
            << ',' << r["parameter_count"].get<std::size_t>();
        for (const auto& [k, v] : config_echo(cell.config))
            if (k != "out") csv << ',' << csv_field(v);
        csv << '\n';
        Json row = r;
        row["freq_mode"] = cell.config.freq_mode;
        row["pooling"] = cell.config.pooling;
        row["config"] = echo_json(cell.config);
        out.report["rows"].push_back(row);
        Json t = cell.run.timing;
        t["freq_mode"] = cell.config.freq_mode;
        t["pooling"] = cell.config.pooling;
        out.timing["rows"].push_back(t);
    }
    return out;
}

TaskOutput run_expressiveness(const RunConfig& c) {
    TaskOutput out;
    Json& rep = out.report;
    rep = {{"task", "expressiveness"}, {"seed", c.seed}, {"config", echo_json(c)}};

    Json kernel = Json::array();
    std::vector<std::pair<std::string, HarmonicSpec>> specs{
        {"exponential", HarmonicSpec::for_mode(FrequencyMode::exponential, 3)},
        {"single", HarmonicSpec::for_mode(FrequencyMode::single)},
        {"linear", HarmonicSpec::for_mode(FrequencyMode::linear, 3)},
        {"learned_init", HarmonicSpec::for_mode(FrequencyMode::learned, 3)},
        {"alternate_2_4_8", HarmonicSpec{FrequencyMode::exponential, {2.0, 4.0, 8.0}}}};
    for (std::size_t i = 0; i < specs.size(); ++i) {
        Rng rng = Rng::derive(c.seed, 3000 + i);
        const double err = kernel_identity_check(specs[i].second, 16, 1000, rng);
        kernel.push_back({{"schedule", specs[i].first},
                          {"frequencies", specs[i].second.frequencies},
                          {"F", 16},
                          {"trials", 1000},
                          {"max_abs_error", err},
                          {"pass", err < 1e-9}});
    }
    rep["kernel_identity"] = kernel;

    auto ones = [](Graph g) {
        g.features = Tensor(Shape{g.num_nodes, 1}, 1.0);
        return g;
    };
    const std::vector<std::pair<std::size_t, std::size_t>> two_triangles{{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}};
    const Graph g_2c3 = ones(from_undirected_edges(6, two_triangles));
    const Graph g_c6 = ones(make_ring(6));
    const Graph g_c3 = ones(make_ring(3));
    const Graph g_p3 = ones(make_chain(3));
    rep["wl"] = {{"C6_classes", wl_refine(g_c6).entries.size()},
                 {"P3_classes", wl_refine(g_p3).entries.size()},
                 {"2C3_vs_C6_equivalent", wl_equivalent(g_2c3, g_c6)},
                 {"C3_vs_P3_equivalent", wl_equivalent(g_c3, g_p3)}};

    ModelConfig base = c.model_config(ModelKind::msh, 1, 2);
    base.pooling = PoolingMode::attention;
    const auto msh = msh_embedder(base);
    Rng prng = Rng::derive(c.seed, 3100);
    std::vector<std::size_t> perm(6);
    for (std::size_t i = 0; i < 6; ++i) perm[i] = i;
    prng.shuffle(perm);
    const std::vector<std::pair<Graph, Graph>> pairs{{g_2c3, g_c6}, {g_2c3, permute_nodes(g_2c3, perm)}};
    rep["wl_upper_bound"] = {{"pairs", {"2C3 vs C6", "2C3 vs permuted 2C3"}},
                             {"seeds", 5},
                             {"pass", wl_upper_bound_check(msh, pairs, 5)}};

    const auto [g1, g2] = star_pair();
    const auto msh_res = discrimination_test(msh, g1, g2, 20, Expectation::distinct);
    const auto gat_res = discrimination_test(zero_attention_gat_embedder(c.hidden), g1, g2, 20, Expectation::identical);
    rep["star_pair"] = {{"msh_distances", msh_res.distances},
                        {"msh_separated", msh_res.hits},
                        {"msh_pass", msh_res.pass},
                        {"gat_zero_attention_distances", gat_res.distances},
                        {"gat_identical", gat_res.hits},
                        {"gat_pass", gat_res.pass}};
    out.timing = {{"task", "expressiveness"}};
    return out;
}

TaskOutput run_scaling(const RunConfig& c) {
    std::vector<std::size_t> sizes;
    for (const auto& s : split_list(c.scaling_sizes)) {
        std::size_t pos = 0;
        unsigned long n = 0;
        try {
            n = std::stoul(s, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != s.size() || n < 3) throw ConfigError("invalid ring size '" + s + "' in scaling_sizes");
        sizes.push_back(n);
    }
    if (sizes.size() < 2) throw ConfigError("scaling needs at least two ring sizes");

    struct Probe {
        GraphBatch batch;
        Model model;
        Rng drop;
        std::vector<double> times;
    };
    auto make_probe = [&](std::size_t n, const ModelConfig& mc) {
        Graph g = make_ring(n);
        g.features = Tensor(Shape{n, 1}, 1.0);
        g.graph_label = 0;
        return Probe{batch(std::vector<Graph>{g}), Model(mc, c.seed), Rng::derive(c.seed, 4000), {}};
    };
    AdamOptions adam;
    adam.lr = c.lr;
    auto epoch = [&](Probe& p) {
        const auto t0 = Clock::now();
        Tape tape;
        {
            Tape::Scope scope(tape);
            const Tensor loss = ops::cross_entropy(p.model.forward(p.batch, true, p.drop).logits, p.batch.labels);
            p.model.params().allocate_grads();
            tape.backward(loss);
        }
        adam_step(p.model.params(), adam);
        return std::chrono::duration<double>(Clock::now() - t0).count();
    };
    // Rounds visit every probe in turn so transient slowdowns hit all sizes alike.
    auto median_epochs = [&](std::vector<Probe>& probes) {
        for (std::size_t r = 0; r < c.scaling_warmup + c.scaling_repeats; ++r)
            for (auto& p : probes) {
                const double dt = epoch(p);
                if (r >= c.scaling_warmup) p.times.push_back(dt);
            }
        std::vector<double> medians;
        for (auto& p : probes) {
            std::sort(p.times.begin(), p.times.end());
            medians.push_back(p.times.empty() ? 0.0 : p.times[p.times.size() / 2]);
        }
        return medians;
    };

    const ModelConfig mc = c.model_config(ModelKind::msh, 1, 2);
    TaskOutput out;
    out.report = {{"task", "scaling"}, {"seed", c.seed}, {"config", echo_json(c)}, {"points", Json::array()}};
    out.timing = {{"task", "scaling"}, {"points", Json::array()}, {"ratios", Json::array()}};
    std::vector<Probe> probes;
    for (auto n : sizes) probes.push_back(make_probe(n, mc));
    const std::vector<double> times = median_epochs(probes);
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const std::size_t n = sizes[i];
        out.report["points"].push_back({{"nodes", n}, {"edges", 2 * n}});
        out.timing["points"].push_back({{"nodes", n}, {"edges", 2 * n}, {"epoch_seconds", times[i]}});
    }
    bool in_band = true;
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double ratio = times[i] / times[i - 1];
        in_band = in_band && ratio >= 1.5 && ratio <= 3.0;
        out.timing["ratios"].push_back(ratio);
    }
    out.timing["ratios_in_band"] = in_band;

    const std::size_t n_probe = sizes.back();
    ModelConfig k2 = mc;
    if (k2.harmonic.mode != FrequencyMode::none) {
        k2.harmonic = HarmonicSpec::for_mode(FrequencyMode::exponential, 2 * mc.harmonic.frequencies.size());
    }
    ModelConfig f2 = mc;
    f2.proj_dim = 2 * mc.proj_dim;
    std::vector<Probe> variants;
    variants.push_back(make_probe(n_probe, k2));
    variants.push_back(make_probe(n_probe, f2));
    const auto variant_times = median_epochs(variants);
    const double t_k2 = variant_times[0], t_f2 = variant_times[1];
    out.timing["probe_nodes"] = n_probe;
    out.timing["K_doubled_seconds"] = t_k2;
    out.timing["F_doubled_seconds"] = t_f2;
    out.timing["K_doubled_slower"] = t_k2 > times.back();
    out.timing["F_doubled_slower"] = t_f2 > times.back();
    out.report["probe"] = {{"nodes", n_probe},
                           {"K_doubled_frequencies", k2.harmonic.frequencies},
                           {"F_doubled", f2.proj_dim}};
    return out;
}

TaskOutput run_embed_dump(const RunConfig& c) {
    const SplitData data = split_data(c);
    const ModelKind kind = parse_model_kind(c.model);
    ModelConfig mc = c.model_config(kind, data.in_dim, data.classes);
    const std::uint64_t seed = Rng::derive(c.seed, 5000).next_u64();
    Model model(mc, seed);
    const auto r = train_model(model, data.graphs, data.train, data.test, train_options(c, seed));

    std::vector<std::size_t> all(data.graphs.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto emb = embed(model, data.graphs, all, c.batch_size);
    fs::create_directories(c.out);
    std::ofstream csv(fs::path(c.out) / "embeddings.csv");
    if (!csv) throw DataError("cannot write embeddings.csv");
    csv << "graph_id,label";
    for (std::size_t j = 0; j < mc.hidden; ++j) csv << ",e" << j;
    csv << '\n';
    for (std::size_t i = 0; i < all.size(); ++i) {
        csv << i << ',' << data.graphs[i].graph_label.value();
        for (double v : emb[i]) csv << ',' << format_real(v);
        csv << '\n';
    }
    TaskOutput out;
    out.report = {{"task", "embed-dump"},
                  {"seed", c.seed},
                  {"config", echo_json(c)},
                  {"model", to_string(kind)},
                  {"num_graphs", all.size()},
                  {"embedding_dim", mc.hidden},
                  {"parameter_count", Model::parameter_count(mc)},
                  {"train_accuracy", r.train_accuracy},
                  {"test_accuracy", r.test_accuracy}};
    out.timing = {{"task", "embed-dump"}, {"train_seconds", r.train_seconds}};
    return out;
}

TaskOutput execute(const RunConfig& c) {
    c.validate();
    apply_threads(c);
    TaskOutput out;
    if (c.task == "synthetic") out = run_synthetic(c);
    else if (c.task == "tu") out = run_tu_cv(c);
    else if (c.task == "ablate") out = run_ablation(c);
    else if (c.task == "expressiveness") out = run_expressiveness(c);
    else if (c.task == "scaling") out = run_scaling(c);
    else if (c.task == "embed-dump") out = run_embed_dump(c);
    else throw ConfigError("unknown task '" + c.task + "'");
    fs::create_directories(c.out);
    write_json(fs::path(c.out) / "report.json", out.report);
    if (c.task == "expressiveness") write_json(fs::path(c.out) / "expressiveness.json", out.report);
    write_json(fs::path(c.out) / "timing.json", out.timing);
    return out;
}

}  // namespace msh
