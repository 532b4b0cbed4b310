#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "msh/config.hpp"
#include "msh/errors.hpp"
#include "msh/synthetic.hpp"
#include "msh/tasks.hpp"
#include "msh/train.hpp"
#include "test_support.hpp"

namespace msh {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("msh_train_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<Graph> toy_set() {
    std::vector<Graph> gs;
    for (std::size_t n : {5u, 6u, 7u, 8u}) {
        Graph g = n % 2 ? make_ring(n) : make_chain(n);
        g = degree_one_hot(g, 2);
        g.graph_label = n % 2;
        gs.push_back(g);
    }
    return gs;
}

ModelConfig toy_model(ModelKind kind = ModelKind::msh) {
    ModelConfig c;
    c.kind = kind;
    c.in_dim = 3;
    c.num_classes = 2;
    c.hidden = 6;
    c.head = 4;
    c.proj_dim = 3;
    return c;
}

RunConfig small_run(const std::string& task, const fs::path& out) {
    RunConfig c;
    c.task = task;
    c.graphs_per_class = 2;
    c.n_min = 11;
    c.n_max = 14;
    c.epochs = 2;
    c.hidden = 6;
    c.head = 4;
    c.proj_dim = 3;
    c.budget_msh = c.budget_gcn = c.budget_gat = 0;
    c.out = out.string();
    return c;
}

TEST(Train, OneEpochOnToySet) {
    const auto data = toy_set();
    for (auto kind : {ModelKind::msh, ModelKind::gcn, ModelKind::gat}) {
        Model m(toy_model(kind), 1);
        TrainOptions opt;
        opt.epochs = 1;
        opt.batch_size = 3;
        const auto r = train_model(m, data, {0, 1, 2, 3}, {}, opt);
        ASSERT_EQ(r.history.size(), 1u);
        EXPECT_TRUE(std::isfinite(r.history[0].loss));
        EXPECT_GE(r.train_accuracy, 0.0);
        EXPECT_LE(r.train_accuracy, 1.0);
    }
}

TEST(Train, ZeroLearningRateKeepsParameters) {
    const auto data = toy_set();
    Model m(toy_model(), 2);
    const auto before = m.params().checksum();
    const std::vector<std::size_t> all{0, 1, 2, 3};
    const double acc0 = accuracy(m, data, all, 4);
    TrainOptions opt;
    opt.epochs = 3;
    opt.lr = 0.0;
    const auto r = train_model(m, data, all, {}, opt);
    EXPECT_EQ(m.params().checksum(), before);
    EXPECT_EQ(r.train_accuracy, acc0);
}

TEST(Train, EvalDoesNotMutateParameters) {
    const auto data = toy_set();
    const Model m(toy_model(), 3);
    const auto before = m.params().checksum();
    predict(m, data, {0, 1, 2, 3}, 2);
    embed(m, data, {0, 1, 2, 3}, 2);
    EXPECT_EQ(m.params().checksum(), before);
}

TEST(Train, SameSeedSameResult) {
    const auto data = toy_set();
    auto run = [&] {
        Model m(toy_model(), 4);
        TrainOptions opt;
        opt.epochs = 3;
        opt.batch_size = 2;
        opt.seed = 9;
        train_model(m, data, {0, 1, 2, 3}, {1}, opt);
        return m.params().checksum();
    };
    EXPECT_EQ(run(), run());
}

TEST(Train, LearnsSeparableToyTask) {
    const auto data = toy_set();
    Model m(toy_model(ModelKind::gcn), 5);
    TrainOptions opt;
    opt.epochs = 150;
    opt.lr = 0.01;
    opt.batch_size = 4;
    const auto r = train_model(m, data, {0, 1, 2, 3}, {}, opt);
    EXPECT_LT(r.history.back().loss, r.history.front().loss);
}

TEST(Train, NonFiniteLossAborts) {
    const auto data = toy_set();
    Model m(toy_model(), 6);
    Tensor b2 = m.params().get("cls.b2");
    b2[0] = std::nan("");
    TrainOptions opt;
    opt.epochs = 1;
    try {
        train_model(m, data, {0, 1}, {}, opt);
        FAIL();
    } catch (const NumericFailure& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("epoch 0"), std::string::npos) << msg;
        EXPECT_NE(msg.find("cls.W1="), std::string::npos) << msg;
    }
}

TEST(Config, DefaultsAndEcho) {
    const RunConfig c;
    EXPECT_EQ(c.layers, 3u);
    EXPECT_EQ(c.hidden, 64u);
    EXPECT_EQ(c.head, 16u);
    EXPECT_DOUBLE_EQ(c.dropout, 0.1);
    EXPECT_DOUBLE_EQ(c.lr, 0.001);
    const auto echo = config_echo(c);
    EXPECT_EQ(echo.at("hidden"), "64");
    EXPECT_EQ(echo.size(), config_keys().size());
}

TEST(Config, SetValuesAndRejectUnknown) {
    RunConfig c;
    set_config_value(c, "lr", "0.01");
    set_config_value(c, "pooling", "max");
    EXPECT_DOUBLE_EQ(c.lr, 0.01);
    EXPECT_EQ(c.pooling, "max");
    EXPECT_THROW(set_config_value(c, "learning_rate", "1"), ConfigError);
    EXPECT_THROW(set_config_value(c, "hidden", "abc"), ConfigError);
    c.pooling = "median";
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, FileParsing) {
    const fs::path dir = scratch("cfg");
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "run.cfg");
        f << "# comment\n\nhidden = 12   # trailing\n  epochs=5\nfrequencies = 2,4,8\n";
    }
    RunConfig c;
    apply_config_file(c, dir / "run.cfg");
    EXPECT_EQ(c.hidden, 12u);
    EXPECT_EQ(c.epochs, 5u);
    EXPECT_EQ(c.harmonic().frequencies, (std::vector<double>{2, 4, 8}));
    {
        std::ofstream f(dir / "bad.cfg");
        f << "nonsense = 1\n";
    }
    EXPECT_THROW(apply_config_file(c, dir / "bad.cfg"), ConfigError);
    {
        std::ofstream f(dir / "noeq.cfg");
        f << "hidden 12\n";
    }
    EXPECT_THROW(apply_config_file(c, dir / "noeq.cfg"), ConfigError);
}

TEST(Config, ModelConfigMapping) {
    RunConfig c;
    c.freq_mode = "linear";
    c.num_frequencies = 4;
    const auto mc = c.model_config(ModelKind::gat, 5, 7);
    EXPECT_EQ(mc.kind, ModelKind::gat);
    EXPECT_EQ(mc.in_dim, 5u);
    EXPECT_EQ(mc.num_classes, 7u);
    EXPECT_EQ(mc.harmonic.frequencies, (std::vector<double>{1, 2, 3, 4}));
}

TEST(MeanStd, Population) {
    const auto ms = mean_std({1.0, 2.0, 3.0, 4.0});
    EXPECT_DOUBLE_EQ(ms.mean, 2.5);
    EXPECT_NEAR(ms.std, std::sqrt(1.25), 1e-15);
    EXPECT_EQ(mean_std({0.7}).std, 0.0);
}

TEST(RunJobs, LowestFailingIndexWins) {
    std::vector<int> done(8, 0);
    run_jobs(3, 8, [&](std::size_t i) { done[i] = 1; });
    EXPECT_EQ(std::accumulate(done.begin(), done.end(), 0), 8);
    try {
        run_jobs(4, 6, [](std::size_t i) {
            if (i == 2 || i == 5) throw DataError("job " + std::to_string(i));
        });
        FAIL();
    } catch (const DataError& e) {
        EXPECT_STREQ(e.what(), "job 2");
    }
}

TEST(Tasks, SyntheticReportIsDeterministic) {
    const auto a = scratch("syn_a"), b = scratch("syn_b");
    execute(small_run("synthetic", a));
    execute(small_run("synthetic", b));
    EXPECT_EQ(slurp(a / "report.json"), slurp(b / "report.json"));
    const auto report = Json::parse(slurp(a / "report.json"));
    ASSERT_EQ(report["models"].size(), 3u);
    for (const auto& m : report["models"]) {
        EXPECT_EQ(m["parameter_count"], m["parameter_recount"]);
        EXPECT_GE(m["test_accuracy"].get<double>(), 0.0);
        EXPECT_LE(m["test_accuracy"].get<double>(), 1.0);
    }
    EXPECT_TRUE(fs::exists(a / "timing.json"));
}

TEST(Tasks, TuCrossValidationAggregates) {
    const auto out = scratch("tu");
    RunConfig c = small_run("tu", out);
    c.dataset = (fs::path(MSH_FIXTURE_DIR) / ".." / ".." / "data" / "MUTAG").string();
    if (!fs::exists(c.dataset)) GTEST_SKIP() << "MUTAG not present";
    c.epochs = 1;
    c.folds = 3;
    const auto r = execute(c).report;
    ASSERT_EQ(r["folds"].size(), 3u);
    std::vector<double> acc;
    for (const auto& f : r["folds"]) acc.push_back(f["test_accuracy"].get<double>());
    const auto ms = mean_std(acc);
    EXPECT_NEAR(r["test_accuracy_mean"].get<double>(), ms.mean, 1e-12);
    EXPECT_NEAR(r["test_accuracy_std"].get<double>(), ms.std, 1e-12);
    EXPECT_NEAR(r["majority_baseline"].get<double>(), 125.0 / 188.0, 1e-12);
}

TEST(Tasks, AblationRowsAndConfigEcho) {
    const auto out = scratch("abl");
    RunConfig c = small_run("ablate", out);
    c.ablate_freq = "none,exponential";
    c.ablate_pool = "mean,attention";
    c.epochs = 1;
    execute(c);
    std::ifstream in(out / "ablation.csv");
    std::string header, line;
    std::getline(in, header);
    EXPECT_EQ(header.rfind("freq_mode,pooling,test_accuracy,train_accuracy,parameter_count,cfg.", 0), 0u);
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        EXPECT_NE(line.find("synthetic"), std::string::npos);
    }
    EXPECT_EQ(rows, 4u);
}

TEST(Tasks, EmbedDumpFormatAndRepeatability) {
    const auto a = scratch("emb_a"), b = scratch("emb_b");
    RunConfig c = small_run("embed-dump", a);
    c.epochs = 1;
    execute(c);
    c.out = b.string();
    execute(c);
    const std::string text = slurp(a / "embeddings.csv");
    EXPECT_EQ(text, slurp(b / "embeddings.csv"));
    std::istringstream in(text);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "graph_id,label,e0,e1,e2,e3,e4,e5");
    std::size_t rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    EXPECT_EQ(rows, 60u);
}

TEST(Tasks, UnknownTaskRejected) {
    RunConfig c;
    c.task = "cluster";
    EXPECT_THROW(c.validate(), ConfigError);
}

}  // namespace
}  // namespace msh
