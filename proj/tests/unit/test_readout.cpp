#include <gtest/gtest.h>

#include <numeric>

#include "msh/errors.hpp"
#include "msh/ops.hpp"
#include "msh/readout.hpp"
#include "test_support.hpp"

namespace msh {
namespace {

ReadoutParams make_readout(std::size_t d, std::size_t L, std::uint64_t seed) {
    Rng rng(seed);
    return ReadoutParams::init(d, L, rng);
}

TEST(AttentionPool, SingleIncomingEdge) {
    auto rp = make_readout(2, 1, 1);
    const Tensor psi = Tensor::matrix({{0.3, -0.7}});
    const Tensor g = attention_pool(psi, make_segments({1}, 2), rp, SigmaMode::softmax);
    const Tensor ref = ops::matmul(psi, rp.W_2);
    EXPECT_EQ(g.at(0, 0), 0.0);
    EXPECT_EQ(g.at(0, 1), 0.0);
    EXPECT_DOUBLE_EQ(g.at(1, 0), ref[0]);
    EXPECT_DOUBLE_EQ(g.at(1, 1), ref[1]);
}

TEST(AttentionPool, IdenticalMessagesUnderSoftmax) {
    auto rp = make_readout(3, 1, 2);
    const Tensor psi = Tensor::matrix({{1, 2, 3}, {1, 2, 3}});
    Tensor alpha;
    const Tensor g = attention_pool(psi, make_segments({0, 0}, 1), rp, SigmaMode::softmax, &alpha);
    const Tensor ref = ops::matmul(Tensor::matrix({{1, 2, 3}}), rp.W_2);
    EXPECT_DOUBLE_EQ(alpha[0], 0.5);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(g.at(0, j), ref[j], 1e-15);
}

TEST(AttentionPool, SigmoidWithZeroScorer) {
    auto rp = make_readout(2, 1, 3);
    for (auto& v : rp.W_1.data()) v = 0.0;
    Rng rng(4);
    const Tensor psi = test::random_tensor({3, 2}, rng);
    Tensor alpha;
    const Tensor g = attention_pool(psi, make_segments({0, 0, 0}, 1), rp, SigmaMode::sigmoid, &alpha);
    for (double a : alpha.data()) EXPECT_EQ(a, 0.5);
    const Tensor ref = ops::scale(ops::matmul(ops::segment_sum(psi, {0, 0, 0}, 1), rp.W_2), 0.5);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(g.at(0, j), ref[j], 1e-15);
}

TEST(AttentionPool, SoftmaxWeightsSumToOne) {
    Rng rng(5);
    auto rp = make_readout(4, 1, 6);
    std::vector<std::size_t> dst(30);
    for (auto& v : dst) v = rng.uniform_int(8);
    Tensor alpha;
    attention_pool(test::random_tensor({30, 4}, rng), make_segments(dst, 8), rp, SigmaMode::softmax, &alpha);
    std::vector<double> total(8, 0.0);
    for (std::size_t e = 0; e < 30; ++e) total[dst[e]] += alpha[e];
    for (double t : total)
        if (t != 0.0) EXPECT_NEAR(t, 1.0, 1e-12);
}

TEST(AttentionPool, IndexOutOfRange) { EXPECT_THROW(make_segments({0, 4}, 3), IndexError); }

TEST(GraphEmbed, Examples) {
    const Graph a = from_undirected_edges(2, {{0, 1}}, Tensor({2, 1}));
    const Graph b = from_undirected_edges(3, {{0, 1}}, Tensor({3, 1}));
    const GraphBatch gb = batch(std::vector<Graph>{a, b});
    const Tensor c({5, 2}, 0.75);
    const Tensor e = graph_embed(c, gb);
    for (double v : e.data()) EXPECT_DOUBLE_EQ(v, 0.75);
    const Tensor g = Tensor::matrix({{1, 0}, {3, 0}, {0, 3}, {0, 6}, {3, 3}});
    const Tensor m = graph_embed(g, gb);
    EXPECT_EQ(test::to_vector(m), (std::vector<double>{2, 0, 1, 4}));
}

TEST(GraphEmbed, EmptyGraphRejected) {
    const Graph a = from_undirected_edges(2, {{0, 1}}, Tensor({2, 1}));
    const Graph empty = from_undirected_edges(0, {}, Tensor({0, 1}));
    const GraphBatch gb = batch(std::vector<Graph>{a, empty});
    EXPECT_THROW(graph_embed(Tensor({2, 1}), gb), ContractError);
    EXPECT_THROW(simple_pool(Tensor({2, 1}), gb, PoolingMode::mean), ContractError);
}

TEST(GraphEmbed, PermutationInvariant) {
    Rng rng(7);
    const Graph g = test::random_graph(6, 3, rng);
    const std::vector<std::size_t> perm{2, 5, 0, 4, 1, 3};
    const Graph p = permute_nodes(g, perm);
    const GraphBatch b0 = batch(std::vector<Graph>{g});
    const GraphBatch b1 = batch(std::vector<Graph>{p});
    EXPECT_LT(test::max_abs_diff(graph_embed(b0.features, b0), graph_embed(b1.features, b1)), 1e-15);
}

TEST(FuseLayers, Examples) {
    Rng rng(8);
    const Tensor l1 = test::random_tensor({2, 3}, rng);
    const Tensor l2 = test::random_tensor({2, 3}, rng);
    const Tensor l3 = test::random_tensor({2, 3}, rng);
    EXPECT_EQ(test::to_vector(fuse_layers({l1, l2, l3}, Tensor::vector({1, 0, 0}))), test::to_vector(l1));
    const Tensor same = fuse_layers({l1, l1, l1}, Tensor::vector({1.0 / 3, 1.0 / 3, 1.0 / 3}));
    EXPECT_LT(test::max_abs_diff(same, l1), 1e-15);
    EXPECT_THROW(fuse_layers({l1, l2}, Tensor::vector({1, 0, 0})), DimensionError);
}

TEST(FuseLayers, LinearInEachLayer) {
    Rng rng(9);
    const Tensor w = test::random_tensor({2}, rng);
    const Tensor a = test::random_tensor({3, 4}, rng), b = test::random_tensor({3, 4}, rng);
    const Tensor other = test::random_tensor({3, 4}, rng);
    const Tensor lhs = fuse_layers({ops::add(a, b), other}, w);
    const Tensor rhs = ops::sub(ops::add(fuse_layers({a, other}, w), fuse_layers({b, other}, w)),
                                fuse_layers({Tensor({3, 4}), other}, w));
    EXPECT_LT(test::max_abs_diff(lhs, rhs), 1e-12);
}

TEST(FuseLayers, GradientOfWeights) {
    Rng rng(10);
    const Tensor a = test::random_tensor({2, 3}, rng), b = test::random_tensor({2, 3}, rng);
    const Tensor m = test::random_tensor({2, 3}, rng);
    Tensor w = test::leaf(test::random_tensor({2}, rng));
    EXPECT_LT(test::grad_check([&] { return ops::sum(ops::mul(fuse_layers({a, b}, w), m)); }, {w}).max_rel_error,
              1e-6);
}

TEST(ReadoutParams, InitAndCount) {
    ParamStore store;
    Rng rng(0);
    const auto rp = ReadoutParams::init(5, 3, rng, &store);
    EXPECT_EQ(rp.w.numel(), 3u);
    for (double v : rp.w.data()) EXPECT_DOUBLE_EQ(v, 1.0 / 3);
    EXPECT_EQ(store.parameter_count(), ReadoutParams::parameter_count(5, 3));
}

TEST(SimplePool, Examples) {
    const Graph g = from_undirected_edges(3, {{0, 1}, {1, 2}}, Tensor::matrix({{1, 5}, {1, 5}, {1, 5}}));
    const GraphBatch one = batch(std::vector<Graph>{g});
    EXPECT_EQ(test::to_vector(simple_pool(one.features, one, PoolingMode::mean)), (std::vector<double>{1, 5}));

    const GraphBatch two = batch(std::vector<Graph>{g, g});
    const Tensor s = simple_pool(two.features, two, PoolingMode::sum);
    EXPECT_EQ(test::to_vector(s), (std::vector<double>{3, 15, 3, 15}));

    const Graph h = from_undirected_edges(2, {{0, 1}}, Tensor::matrix({{4, -1}, {2, 3}}));
    const Graph dup = from_undirected_edges(3, {{0, 1}, {1, 2}}, Tensor::matrix({{4, -1}, {2, 3}, {1, -2}}));
    const GraphBatch hb = batch(std::vector<Graph>{h, dup});
    const Tensor mx = simple_pool(hb.features, hb, PoolingMode::max);
    EXPECT_EQ(test::to_vector(mx), (std::vector<double>{4, 3, 4, 3}));
}

TEST(SimplePool, GradientAllKinds) {
    Rng rng(11);
    const Graph a = test::random_graph(4, 3, rng), b = test::random_graph(5, 3, rng);
    const GraphBatch gb = batch(std::vector<Graph>{a, b});
    Tensor x = test::leaf(gb.features.detach());
    const Tensor m = test::random_tensor({2, 3}, rng);
    for (auto kind : {PoolingMode::mean, PoolingMode::sum, PoolingMode::max}) {
        const auto r = test::grad_check([&] { return ops::sum(ops::mul(simple_pool(x, gb, kind), m)); }, {x});
        EXPECT_LT(r.max_rel_error, 1e-4) << to_string(kind);
    }
}

TEST(NodeHead, Examples) {
    Rng rng(12);
    auto cls = Classifier::init(3, 0, 2, rng);
    for (auto& v : cls.W1.data()) v = 0.0;
    cls.b1[0] = 0.5;
    cls.b1[1] = -2.0;
    const Tensor logits = node_head(test::random_tensor({4, 3}, rng), cls);
    for (std::size_t r = 0; r < 4; ++r) {
        EXPECT_EQ(logits.at(r, 0), 0.5);
        EXPECT_EQ(logits.at(r, 1), -2.0);
    }
    EXPECT_THROW(node_head(Tensor({4, 5}), cls), DimensionError);
}

TEST(NodeHead, ShiftKeepsArgmaxAndGradient) {
    Rng rng(13);
    auto cls = Classifier::init(3, 4, 3, rng);
    const Tensor x = test::random_tensor({5, 3}, rng);
    const Tensor l = node_head(x, cls);
    for (auto& v : cls.b2.data()) v += 10.0;
    const Tensor shifted = node_head(x, cls);
    for (std::size_t r = 0; r < 5; ++r) {
        std::size_t a = 0, b = 0;
        for (std::size_t j = 1; j < 3; ++j) {
            if (l.at(r, j) > l.at(r, a)) a = j;
            if (shifted.at(r, j) > shifted.at(r, b)) b = j;
        }
        EXPECT_EQ(a, b);
    }
    ParamStore store;
    Rng init(14);
    const auto head = Classifier::init(3, 4, 3, init, &store);
    EXPECT_EQ(store.parameter_count(), Classifier::parameter_count(3, 4, 3));
    for (const auto& name : {"cls.b1", "cls.b2"}) {
        Tensor t = store.get(name);
        for (auto& v : t.data()) v = rng.uniform(-0.5, 0.5);
    }
    std::vector<Tensor> params;
    for (const auto& [name, t] : store) params.push_back(t);
    Tensor xl = test::leaf(x.detach());
    params.push_back(xl);
    const auto r = test::grad_check([&] { return ops::cross_entropy(node_head(xl, head), {0, 1, 2, 1, 0}); }, params);
    EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST(AttentionPool, GradientBothSigmas) {
    Rng rng(15);
    ParamStore store;
    Rng init(16);
    const auto rp = ReadoutParams::init(3, 1, init, &store);
    Tensor psi = test::leaf(test::random_tensor({6, 3}, rng));
    const auto dst = make_segments({0, 1, 1, 2, 2, 2}, 4);
    const Tensor m = test::random_tensor({4, 3}, rng);
    std::vector<Tensor> params{store.get("readout.W_1"), store.get("readout.W_2"), psi};
    for (auto sigma : {SigmaMode::softmax, SigmaMode::sigmoid}) {
        const auto r = test::grad_check(
            [&] { return ops::sum(ops::mul(attention_pool(psi, dst, rp, sigma), m)); }, params);
        EXPECT_LT(r.max_rel_error, 1e-4) << to_string(sigma) << " " << r.worst;
    }
}

TEST(Modes, ParseRoundTrip) {
    for (auto m : {PoolingMode::attention, PoolingMode::mean, PoolingMode::sum, PoolingMode::max})
        EXPECT_EQ(parse_pooling_mode(to_string(m)), m);
    for (auto m : {SigmaMode::softmax, SigmaMode::sigmoid}) EXPECT_EQ(parse_sigma_mode(to_string(m)), m);
    EXPECT_THROW(parse_pooling_mode("median"), ContractError);
}

}  // namespace
}  // namespace msh
