#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "msh/errors.hpp"
#include "msh/graph.hpp"
#include "msh/ops.hpp"
#include "msh/readout.hpp"
#include "msh/synthetic.hpp"
#include "msh/tu_dataset.hpp"
#include "test_support.hpp"

namespace msh {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("msh_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

TEST(FromUndirected, TriangleAndSingleEdge) {
    const Graph t = from_undirected_edges(3, {{0, 1}, {1, 2}, {0, 2}});
    EXPECT_EQ(t.edges.size(), 6u);
    EXPECT_TRUE(std::is_sorted(t.edges.begin(), t.edges.end()));
    const Graph e = from_undirected_edges(2, {{0, 1}});
    EXPECT_EQ(e.edges, (std::vector<Edge>{{0, 1}, {1, 0}}));
    EXPECT_EQ(e.features.shape(), (Shape{2, 0}));
}

TEST(FromUndirected, EmptyEdgeSet) {
    const Graph g = from_undirected_edges(4, {});
    EXPECT_EQ(g.num_nodes, 4u);
    EXPECT_TRUE(g.edges.empty());
    const GraphBatch b = batch(std::vector<Graph>{g});
    EXPECT_EQ(b.num_edges(), 0u);
}

TEST(FromUndirected, Errors) {
    EXPECT_THROW(from_undirected_edges(2, {{0, 2}}), IndexError);
    EXPECT_THROW(from_undirected_edges(3, {{0, 1}, {1, 0}}), ContractError);
    EXPECT_THROW(from_undirected_edges(3, {{1, 1}}), ContractError);
    EXPECT_THROW(from_undirected_edges(2, {{0, 1}}, Tensor({3, 1})), DimensionError);
}

TEST(DegreeOneHot, Examples) {
    const Graph star = degree_one_hot(from_undirected_edges(4, {{0, 1}, {0, 2}, {0, 3}}), 3);
    EXPECT_EQ(star.feature_dim(), 4u);
    EXPECT_EQ(star.features.at(0, 3), 1.0);
    EXPECT_EQ(star.features.at(1, 1), 1.0);

    const Graph iso = degree_one_hot(from_undirected_edges(2, {}), 2);
    EXPECT_EQ(iso.features.at(0, 0), 1.0);

    const Graph ring = degree_one_hot(make_ring(7), 4);
    for (std::size_t v = 0; v < 7; ++v)
        for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(ring.features.at(v, j), j == 2 ? 1.0 : 0.0);
}

TEST(DegreeOneHot, ExceededDegreeNamesNode) {
    try {
        degree_one_hot(from_undirected_edges(4, {{2, 0}, {2, 1}, {2, 3}}), 2);
        FAIL();
    } catch (const ContractError& e) {
        EXPECT_NE(std::string(e.what()).find("node 2"), std::string::npos) << e.what();
    }
}

TEST(PermuteNodes, Examples) {
    Rng rng(4);
    const Graph g = test::random_graph(6, 2, rng);
    EXPECT_TRUE(same_graph(permute_nodes(g, {0, 1, 2, 3, 4, 5}), g));
    const std::vector<std::size_t> inv{1, 0, 3, 2, 5, 4};
    EXPECT_TRUE(same_graph(permute_nodes(permute_nodes(g, inv), inv), g));
    const Graph tri = from_undirected_edges(3, {{0, 1}, {1, 2}, {0, 2}});
    EXPECT_EQ(permute_nodes(tri, {1, 2, 0}).edges, tri.edges);
    EXPECT_THROW(permute_nodes(tri, {0, 0, 1}), ContractError);
    EXPECT_THROW(permute_nodes(tri, {0, 1}), ContractError);
}

TEST(PermuteNodes, FeatureRowsMove) {
    Graph g = from_undirected_edges(3, {{0, 1}}, Tensor::matrix({{1}, {2}, {3}}));
    const Graph p = permute_nodes(g, {2, 0, 1});
    EXPECT_EQ(p.features.at(2, 0), 1.0);
    EXPECT_EQ(p.features.at(0, 0), 2.0);
    EXPECT_EQ(p.edges, (std::vector<Edge>{{0, 2}, {2, 0}}));
}

TEST(Batch, TwoEdgesOffset) {
    const Graph k2 = from_undirected_edges(2, {{0, 1}}, Tensor({2, 1}, 1.0));
    const GraphBatch b = batch(std::vector<Graph>{k2, k2});
    EXPECT_EQ(b.num_nodes, 4u);
    EXPECT_EQ(b.edges, (std::vector<Edge>{{0, 1}, {1, 0}, {2, 3}, {3, 2}}));
    EXPECT_EQ(b.graph_of_node, (std::vector<std::size_t>{0, 0, 1, 1}));
    EXPECT_EQ(b.nodes_in(1), 2u);
}

TEST(Batch, Errors) {
    EXPECT_THROW(batch(std::vector<Graph>{}), ContractError);
    const Graph a = from_undirected_edges(2, {{0, 1}}, Tensor({2, 1}));
    const Graph b = from_undirected_edges(2, {{0, 1}}, Tensor({2, 2}));
    EXPECT_THROW(batch(std::vector<Graph>{a, b}), DimensionError);
}

TEST(Batch, EdgesStayInsideGraphsAndCountsAdd) {
    Rng rng(6);
    std::vector<Graph> gs;
    for (int i = 0; i < 5; ++i) gs.push_back(test::random_graph(3 + rng.uniform_int(5), 2, rng));
    const GraphBatch b = batch(gs);
    std::size_t total = 0;
    for (std::size_t i = 0; i < gs.size(); ++i) total += b.nodes_in(i);
    EXPECT_EQ(total, b.num_nodes);
    for (const auto& e : b.edges) EXPECT_EQ(b.graph_of_node[e.src], b.graph_of_node[e.dst]);
    // Self-looped edge set used by the baselines: every node has exactly one loop.
    std::vector<int> loops(b.num_nodes, 0);
    for (std::size_t e = 0; e < b.loop_src->size(); ++e)
        if (b.loop_src->segment_of()[e] == b.loop_dst->segment_of()[e]) ++loops[b.loop_src->segment_of()[e]];
    EXPECT_TRUE(std::all_of(loops.begin(), loops.end(), [](int c) { return c == 1; }));
}

TEST(Batch, PerGraphMeanMatchesSeparate) {
    Rng rng(7);
    std::vector<Graph> gs;
    for (int i = 0; i < 4; ++i) gs.push_back(test::random_graph(2 + rng.uniform_int(6), 3, rng));
    const GraphBatch b = batch(gs);
    const Tensor pooled = graph_embed(b.features, b);
    for (std::size_t i = 0; i < gs.size(); ++i) {
        const GraphBatch single = batch(std::vector<Graph>{gs[i]});
        const Tensor one = graph_embed(single.features, single);
        for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(pooled.at(i, j), one.at(0, j), 1e-12);
    }
}

TEST(StratifiedKFold, BalancedTwentyGraphs) {
    std::vector<std::size_t> labels(20);
    for (std::size_t i = 0; i < 20; ++i) labels[i] = i % 2;
    const auto split = stratified_kfold(labels, 10, 3);
    ASSERT_EQ(split.folds.size(), 10u);
    for (const auto& [train, test] : split.folds) {
        ASSERT_EQ(test.size(), 2u);
        EXPECT_NE(labels[test[0]], labels[test[1]]);
        EXPECT_EQ(train.size(), 18u);
    }
    EXPECT_EQ(stratified_kfold(labels, 10, 3).folds, split.folds);
}

TEST(StratifiedKFold, PartitionAndStratificationProperty) {
    Rng rng(12);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 30 + rng.uniform_int(100);
        const std::size_t classes = 2 + rng.uniform_int(4);
        std::vector<std::size_t> labels(n);
        for (auto& l : labels) l = rng.uniform_int(classes);
        const std::size_t k = 2 + rng.uniform_int(9);
        const auto split = stratified_kfold(labels, k, trial);
        std::vector<int> seen(n, 0);
        std::map<std::size_t, std::vector<std::size_t>> per_class_counts;
        for (const auto& [train, test] : split.folds) {
            std::map<std::size_t, std::size_t> counts;
            for (auto i : test) {
                ++seen[i];
                ++counts[labels[i]];
            }
            for (std::size_t c = 0; c < classes; ++c) per_class_counts[c].push_back(counts[c]);
            std::set<std::size_t> tr(train.begin(), train.end());
            for (auto i : test) EXPECT_FALSE(tr.count(i));
            EXPECT_EQ(train.size() + test.size(), n);
        }
        EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
        for (auto& [c, counts] : per_class_counts) {
            const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
            EXPECT_LE(*hi - *lo, 1u);
        }
    }
}

TEST(StratifiedKFold, Errors) {
    EXPECT_THROW(stratified_kfold({0, 1, 0}, 4, 0), ContractError);
    EXPECT_THROW(stratified_kfold({0, 1, 0}, 1, 0), ContractError);
}

TEST(StratifiedSplit, HoldsOutFractionPerClass) {
    std::vector<std::size_t> labels;
    for (std::size_t c = 0; c < 3; ++c)
        for (int i = 0; i < 10; ++i) labels.push_back(c);
    const auto [train, test] = stratified_split(labels, 0.2, 1);
    EXPECT_EQ(test.size(), 6u);
    EXPECT_EQ(train.size(), 24u);
    std::map<std::size_t, int> counts;
    for (auto i : test) ++counts[labels[i]];
    for (auto& [c, n] : counts) EXPECT_EQ(n, 2);
}

TEST(TuDataset, ToyFixture) {
    const auto graphs = load_tu_dataset(fs::path(MSH_FIXTURE_DIR) / "TOY", "TOY");
    ASSERT_EQ(graphs.size(), 2u);
    EXPECT_EQ(graphs[0].edges.size(), 6u);
    EXPECT_EQ(graphs[1].edges.size(), 4u);
    EXPECT_EQ(graphs[0].num_nodes, 3u);
    // Labels {1, -1} become {1, 0}.
    EXPECT_EQ(graphs[0].graph_label, 1u);
    EXPECT_EQ(graphs[1].graph_label, 0u);
    // Node labels one-hot encoded: three distinct labels.
    EXPECT_EQ(graphs[0].feature_dim(), 3u);
    EXPECT_EQ(graphs[1].features.at(0, 2), 1.0);
    EXPECT_EQ(graphs[1].features.at(2, 1), 1.0);
    EXPECT_EQ(graphs[1].edges, (std::vector<Edge>{{0, 1}, {1, 0}, {1, 2}, {2, 1}}));
}

TEST(TuDataset, RoundTrip) {
    const auto graphs = load_tu_dataset(fs::path(MSH_FIXTURE_DIR) / "TOY", "TOY");
    const auto dir = scratch_dir("roundtrip");
    write_tu_dataset(dir, "TOY", graphs);
    const auto again = load_tu_dataset(dir, "TOY");
    ASSERT_EQ(again.size(), graphs.size());
    for (std::size_t i = 0; i < graphs.size(); ++i) EXPECT_TRUE(same_graph(graphs[i], again[i])) << i;
}

TEST(TuDataset, CrlfWhitespaceAndDegreeFallback) {
    const auto dir = scratch_dir("crlf");
    write_file(dir / "X_A.txt", " 1 , 2\r\n2, 1\r\n2,3\r\n3 ,2\r\n\r\n");
    write_file(dir / "X_graph_indicator.txt", "1\r\n1\r\n1\r\n");
    write_file(dir / "X_graph_labels.txt", "7\r\n");
    const auto graphs = load_tu_dataset(dir, "X");
    ASSERT_EQ(graphs.size(), 1u);
    EXPECT_EQ(graphs[0].edges.size(), 4u);
    EXPECT_EQ(graphs[0].feature_dim(), 3u);
    EXPECT_EQ(graphs[0].features.at(1, 2), 1.0);
    EXPECT_EQ(graphs[0].graph_label, 0u);
}

TEST(TuDataset, Errors) {
    const auto dir = scratch_dir("errors");
    EXPECT_THROW(load_tu_dataset(dir, "X"), DataError);
    write_file(dir / "X_A.txt", "1, 3\n3, 1\n");
    write_file(dir / "X_graph_indicator.txt", "1\n1\n2\n");
    write_file(dir / "X_graph_labels.txt", "0\n1\n");
    EXPECT_THROW(load_tu_dataset(dir, "X"), DataError);
    write_file(dir / "X_A.txt", "1, 2\n2, 1\n");
    write_file(dir / "X_node_labels.txt", "0\n1\n");
    EXPECT_THROW(load_tu_dataset(dir, "X"), DataError);
    write_file(dir / "X_node_labels.txt", "0\n1\n1\n");
    write_file(dir / "X_graph_labels.txt", "0\n");
    EXPECT_THROW(load_tu_dataset(dir, "X"), DataError);
}

TEST(TuDataset, Mutag) {
    const fs::path dir = fs::path(MSH_FIXTURE_DIR) / ".." / ".." / "data" / "MUTAG";
    if (!fs::exists(dir)) GTEST_SKIP() << "MUTAG not present";
    const auto graphs = load_tu_dataset(dir, "MUTAG");
    EXPECT_EQ(graphs.size(), 188u);
    EXPECT_EQ(num_classes(graphs), 2u);
    // Independent count over the raw label file.
    std::ifstream in(dir / "MUTAG_graph_labels.txt");
    std::map<int, std::size_t> raw;
    for (int v; in >> v;) ++raw[v];
    std::map<std::size_t, std::size_t> mapped;
    for (const auto& g : graphs) ++mapped[*g.graph_label];
    EXPECT_EQ(mapped[0], raw[-1]);
    EXPECT_EQ(mapped[1], raw[1]);
    EXPECT_EQ(mapped[1], 125u);
    for (const auto& g : graphs) EXPECT_NO_THROW(g.validate());
}

}  // namespace
}  // namespace msh
