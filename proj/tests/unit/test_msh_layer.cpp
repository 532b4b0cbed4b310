#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <numbers>

#include "msh/errors.hpp"
#include "msh/expressiveness.hpp"
#include "msh/msh_layer.hpp"
#include "msh/ops.hpp"
#include "test_support.hpp"

namespace msh {
namespace {

using std::numbers::pi;

MshLayerParams make_params(std::size_t d, std::size_t F, const HarmonicSpec& spec, std::uint64_t seed) {
    Rng rng(seed);
    return MshLayerParams::init(d, F, spec, rng);
}

Tensor row_of(const Tensor& m, std::size_t r) {
    const std::size_t c = m.cols();
    return Tensor({c}, std::vector<double>(m.data().begin() + r * c, m.data().begin() + (r + 1) * c));
}

TEST(HarmonicSpec, Schedules) {
    EXPECT_EQ(HarmonicSpec::for_mode(FrequencyMode::exponential).frequencies, (std::vector<double>{1, 2, 4}));
    EXPECT_EQ(HarmonicSpec::for_mode(FrequencyMode::linear).frequencies, (std::vector<double>{1, 2, 3}));
    EXPECT_EQ(HarmonicSpec::for_mode(FrequencyMode::single).frequencies, (std::vector<double>{1}));
    EXPECT_EQ(HarmonicSpec::for_mode(FrequencyMode::learned).frequencies, (std::vector<double>{1, 2, 4}));
    EXPECT_EQ(HarmonicSpec::for_mode(FrequencyMode::none).num_frequencies(), 0u);
    EXPECT_EQ(HarmonicSpec::for_mode(FrequencyMode::none).code_width(16), 16u);
    EXPECT_EQ(HarmonicSpec{}.code_width(16), 96u);
}

TEST(HarmonicSpec, Validation) {
    EXPECT_THROW((HarmonicSpec{FrequencyMode::exponential, {1.0, 1.0}}).validate(), ContractError);
    EXPECT_THROW((HarmonicSpec{FrequencyMode::exponential, {0.0, 2.0}}).validate(), ContractError);
    EXPECT_THROW((HarmonicSpec{FrequencyMode::exponential, {}}).validate(), ContractError);
    EXPECT_THROW(parse_frequency_mode("cubic"), ContractError);
    for (auto m : {FrequencyMode::none, FrequencyMode::single, FrequencyMode::linear, FrequencyMode::exponential,
                   FrequencyMode::learned})
        EXPECT_EQ(parse_frequency_mode(to_string(m)), m);
}

TEST(GenerateProjection, ZeroWeightsGiveConstantMatrix) {
    auto p = make_params(3, 3, HarmonicSpec{}, 1);
    for (auto& v : p.W_f.data()) v = 0.0;
    for (std::size_t f = 0; f < 3; ++f) p.b_f[f * 3 + f] = 1.0;
    Rng rng(2);
    const auto a = generate_projection(test::random_tensor({3}, rng), p);
    const auto b = generate_projection(test::random_tensor({3}, rng), p);
    EXPECT_EQ(test::to_vector(a.matrix), test::to_vector(b.matrix));
    EXPECT_EQ(a.matrix.shape(), (Shape{3, 3}));
    EXPECT_EQ(a.matrix.at(1, 1), 1.0);
}

TEST(GenerateProjection, ZeroInputGivesBiases) {
    auto p = make_params(4, 2, HarmonicSpec{}, 3);
    Rng rng(4);
    p.b_f = test::random_tensor({8}, rng);
    p.b_phi = test::random_tensor({2}, rng);
    const auto proj = generate_projection(Tensor({4}), p);
    EXPECT_EQ(test::to_vector(proj.matrix), test::to_vector(p.b_f));
    EXPECT_EQ(test::to_vector(proj.phase), test::to_vector(p.b_phi));
    EXPECT_THROW(generate_projection(Tensor({5}), p), DimensionError);
}

TEST(GenerateProjection, RowMajorReshape) {
    auto p = make_params(2, 3, HarmonicSpec{}, 5);
    Rng rng(6);
    const Tensor h = test::random_tensor({2}, rng);
    const auto proj = generate_projection(h, p);
    for (std::size_t f = 0; f < 3; ++f)
        for (std::size_t j = 0; j < 2; ++j) {
            const double expect = h[0] * p.W_f.at(0, f * 2 + j) + h[1] * p.W_f.at(1, f * 2 + j);
            EXPECT_NEAR(proj.matrix.at(f, j), expect, 1e-15);
        }
}

TEST(GenerateProjection, DistinctInputsDistinctProjections) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto p = make_params(4, 3, HarmonicSpec{}, seed);
        Rng rng(100 + seed);
        const auto a = generate_projection(test::random_tensor({4}, rng), p);
        const auto b = generate_projection(test::random_tensor({4}, rng), p);
        EXPECT_NE(test::to_vector(a.matrix), test::to_vector(b.matrix));
        EXPECT_NE(test::to_vector(a.phase), test::to_vector(b.phase));
    }
}

TEST(Project, IdentityAndZeroSource) {
    const Projection id{Tensor::matrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}), Tensor({3})};
    const Tensor h = Tensor::vector({0.5, -1.0, 2.0});
    EXPECT_EQ(test::to_vector(project(id, h)), test::to_vector(h));
    const Projection shifted{Tensor::matrix({{1, 2}, {3, 4}}), Tensor::vector({7, 8})};
    EXPECT_EQ(test::to_vector(project(shifted, Tensor({2}))), (std::vector<double>{7, 8}));
    EXPECT_THROW(project(shifted, Tensor({3})), DimensionError);
}

TEST(HarmonicEncode, Examples) {
    const Tensor z = harmonic_encode(Tensor({4}), HarmonicSpec{});
    ASSERT_EQ(z.numel(), 24u);
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t f = 0; f < 4; ++f) {
            EXPECT_EQ(z[k * 8 + f], 0.0);
            EXPECT_EQ(z[k * 8 + 4 + f], 1.0);
        }
    const Tensor c = harmonic_encode(Tensor::vector({pi / 2}), HarmonicSpec{});
    const std::vector<double> expect{1, 0, 0, -1, 0, 1};
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(c[i], expect[i], 1e-15) << i;
    EXPECT_THROW(harmonic_encode(Tensor({2}), HarmonicSpec::for_mode(FrequencyMode::none)), ContractError);
}

TEST(HarmonicEncode, RangeProperty) {
    Rng rng(9);
    const Tensor c = harmonic_encode(test::random_tensor({64}, rng, -100.0, 100.0), HarmonicSpec{});
    for (double v : c.data()) {
        EXPECT_GE(v, -1.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(KernelIdentity, ClosedForms) {
    Rng rng(10);
    const Tensor p = test::random_tensor({16}, rng, -pi, pi);
    const Tensor c = harmonic_encode(p, HarmonicSpec{});
    double dot = 0.0;
    for (double v : c.data()) dot += v * v;
    EXPECT_NEAR(dot, 48.0, 1e-12);
    const HarmonicSpec one{FrequencyMode::single, {1.0}};
    const Tensor a = harmonic_encode(Tensor::vector({0.0}), one);
    const Tensor b = harmonic_encode(Tensor::vector({pi}), one);
    EXPECT_NEAR(a[0] * b[0] + a[1] * b[1], -1.0, 1e-15);
}

TEST(KernelIdentity, AllSchedules) {
    for (const HarmonicSpec& spec :
         {HarmonicSpec{}, HarmonicSpec::for_mode(FrequencyMode::single), HarmonicSpec::for_mode(FrequencyMode::linear),
          HarmonicSpec{FrequencyMode::exponential, {2.0, 4.0, 8.0}}, HarmonicSpec::for_mode(FrequencyMode::exponential, 5)}) {
        Rng rng(11);
        EXPECT_LT(kernel_identity_check(spec, 16, 1000, rng), 1e-9);
    }
}

TEST(AblationEncode, Modes) {
    Rng rng(12);
    const Tensor p = test::random_tensor({5}, rng);
    EXPECT_TRUE(ablation_encode(p, HarmonicSpec::for_mode(FrequencyMode::none)).same(p));
    const Tensor single = ablation_encode(p, HarmonicSpec::for_mode(FrequencyMode::single));
    const Tensor expo = ablation_encode(p, HarmonicSpec{});
    ASSERT_EQ(single.numel(), 10u);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(single[i], expo[i]);
    const auto learned = HarmonicSpec::for_mode(FrequencyMode::learned);
    const auto lp = make_params(5, 5, learned, 1);
    EXPECT_EQ(test::to_vector(ablation_encode(p, learned, lp.freqs)), test::to_vector(expo));
}

TEST(MshLayerParams, ShapesAndCount) {
    for (auto mode : {FrequencyMode::none, FrequencyMode::single, FrequencyMode::exponential, FrequencyMode::learned}) {
        const auto spec = HarmonicSpec::for_mode(mode);
        ParamStore store;
        Rng rng(0);
        const auto p = MshLayerParams::init(6, 4, spec, rng, &store, "l.");
        EXPECT_EQ(p.W_f.shape(), (Shape{6, 24}));
        EXPECT_EQ(p.W_o.shape(), (Shape{spec.code_width(4), 6}));
        EXPECT_EQ(store.parameter_count(), MshLayerParams::parameter_count(6, 4, spec));
        EXPECT_EQ(store.contains("l.freqs"), mode == FrequencyMode::learned);
    }
}

TEST(EdgeMessage, ZeroOutputWeights) {
    auto p = make_params(3, 2, HarmonicSpec{}, 1);
    for (auto& v : p.W_o.data()) v = 0.0;
    Rng rng(2);
    const Tensor m = edge_message(test::random_tensor({3}, rng), test::random_tensor({3}, rng), p, HarmonicSpec{});
    for (double v : m.data()) EXPECT_EQ(v, 0.0);
}

TEST(EdgeMessage, HolderBound) {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto p = make_params(4, 3, HarmonicSpec{}, trial);
        const Tensor m =
            edge_message(test::random_tensor({4}, rng), test::random_tensor({4}, rng), p, HarmonicSpec{});
        for (std::size_t j = 0; j < 4; ++j) {
            double l1 = 0.0;
            for (std::size_t i = 0; i < p.W_o.shape()[0]; ++i) l1 += std::abs(p.W_o.at(i, j));
            EXPECT_LE(std::abs(m[j]), l1 + 1e-12);
        }
    }
}

TEST(EdgeMessage, ReceiverSensitivity) {
    std::size_t differ = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto p = make_params(4, 4, HarmonicSpec{}, seed);
        Rng rng(1000 + seed);
        const Tensor h_u = test::random_tensor({4}, rng);
        const Tensor a = edge_message(test::random_tensor({4}, rng), h_u, p, HarmonicSpec{});
        const Tensor b = edge_message(test::random_tensor({4}, rng), h_u, p, HarmonicSpec{});
        differ += test::max_abs_diff(a, b) > 1e-9;
    }
    EXPECT_GE(differ, 19u);
}

TEST(EdgeMessage, StarPairNeighborSwapChangesMessages) {
    const auto [g1, g2] = star_pair();
    const auto p = make_params(2, 4, HarmonicSpec{}, 7);
    const Tensor center = Tensor::vector({0.5, -0.25});  // encoded centre
    Tensor sum1({2}), sum2({2});
    for (std::size_t u = 1; u < 4; ++u) {
        sum1 = ops::add(sum1, edge_message(center, row_of(g1.features, u), p, HarmonicSpec{}));
        sum2 = ops::add(sum2, edge_message(center, row_of(g2.features, u), p, HarmonicSpec{}));
    }
    EXPECT_GT(test::max_abs_diff(sum1, sum2), 1e-6);
}

TEST(ForwardLayer, MatchesPerEdgeMessages) {
    Rng rng(21);
    const Graph g = test::random_graph(5, 3, rng);
    const auto p = make_params(3, 2, HarmonicSpec{}, 22);
    const GraphBatch b = batch(std::vector<Graph>{g});
    Rng drop(0);
    const auto out = forward_layer(b, b.features, p, HarmonicSpec{}, 0.1, false, drop);
    ASSERT_EQ(out.edge_messages.shape(), (Shape{b.num_edges(), 3}));
    for (std::size_t e = 0; e < b.num_edges(); ++e) {
        const Tensor ref =
            edge_message(row_of(b.features, b.edges[e].dst), row_of(b.features, b.edges[e].src), p, HarmonicSpec{});
        for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(out.edge_messages.at(e, j), ref[j], 1e-12);
    }
}

TEST(ForwardLayer, NoEdgesIsPureMlp) {
    const Graph g = from_undirected_edges(3, {}, Tensor::matrix({{1, 2}, {0, -1}, {3, 0}}));
    const auto p = make_params(2, 2, HarmonicSpec{}, 1);
    const GraphBatch b = batch(std::vector<Graph>{g});
    Rng drop(0);
    const auto out = forward_layer(b, b.features, p, HarmonicSpec{}, 0.0, false, drop);
    const Tensor ref = ops::add_row(
        ops::matmul(ops::relu(ops::add_row(ops::matmul(g.features, p.W_u1), p.b_u1)), p.W_u2), p.b_u2);
    EXPECT_EQ(test::to_vector(out.features), test::to_vector(ref));
    EXPECT_EQ(out.edge_messages.numel(), 0u);
}

TEST(ForwardLayer, BatchEqualsSequential) {
    Rng rng(30);
    std::vector<Graph> gs;
    for (int i = 0; i < 4; ++i) gs.push_back(test::random_graph(3 + rng.uniform_int(5), 3, rng));
    const auto p = make_params(3, 4, HarmonicSpec{}, 31);
    const GraphBatch all = batch(gs);
    Rng drop(0);
    const auto joint = forward_layer(all, all.features, p, HarmonicSpec{}, 0.1, false, drop);
    for (std::size_t i = 0; i < gs.size(); ++i) {
        const GraphBatch one = batch(std::vector<Graph>{gs[i]});
        const auto sep = forward_layer(one, one.features, p, HarmonicSpec{}, 0.1, false, drop);
        for (std::size_t v = 0; v < gs[i].num_nodes; ++v)
            for (std::size_t j = 0; j < 3; ++j)
                EXPECT_NEAR(joint.features.at(all.node_offset[i] + v, j), sep.features.at(v, j), 1e-12);
    }
}

TEST(ForwardLayer, PermutationEquivariance) {
    Rng rng(40);
    for (int trial = 0; trial < 5; ++trial) {
        const Graph g = test::random_graph(7, 3, rng);
        std::vector<std::size_t> perm(7);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        const auto p = make_params(3, 4, HarmonicSpec{}, trial);
        Rng drop(0);
        const GraphBatch b0 = batch(std::vector<Graph>{g});
        const GraphBatch b1 = batch(std::vector<Graph>{permute_nodes(g, perm)});
        const auto o0 = forward_layer(b0, b0.features, p, HarmonicSpec{}, 0.1, false, drop);
        const auto o1 = forward_layer(b1, b1.features, p, HarmonicSpec{}, 0.1, false, drop);
        for (std::size_t v = 0; v < 7; ++v)
            for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(o0.features.at(v, j), o1.features.at(perm[v], j), 1e-9);
    }
}

TEST(ForwardLayer, IsomorphicGraphsInOneBatch) {
    Rng rng(41);
    const Graph g = test::random_graph(6, 2, rng);
    const std::vector<std::size_t> perm{5, 3, 1, 0, 2, 4};
    const GraphBatch b = batch(std::vector<Graph>{g, permute_nodes(g, perm)});
    const auto p = make_params(2, 3, HarmonicSpec{}, 1);
    Rng drop(0);
    const auto out = forward_layer(b, b.features, p, HarmonicSpec{}, 0.1, false, drop);
    for (std::size_t v = 0; v < 6; ++v)
        for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(out.features.at(v, j), out.features.at(6 + perm[v], j), 1e-9);
}

TEST(ForwardLayer, DimensionMismatch) {
    const Graph g = from_undirected_edges(3, {{0, 1}}, Tensor({3, 2}));
    const auto p = make_params(3, 2, HarmonicSpec{}, 1);
    const GraphBatch b = batch(std::vector<Graph>{g});
    Rng drop(0);
    EXPECT_THROW(forward_layer(b, b.features, p, HarmonicSpec{}, 0.1, false, drop), DimensionError);
}

TEST(ForwardLayer, GradientOfEveryParameter) {
    for (auto mode : {FrequencyMode::exponential, FrequencyMode::none, FrequencyMode::learned}) {
        const auto spec = HarmonicSpec::for_mode(mode);
        Rng rng(50);
        const Graph g = test::random_graph(5, 3, rng);
        const GraphBatch b = batch(std::vector<Graph>{g});
        ParamStore store;
        Rng init(51);
        const auto p = MshLayerParams::init(3, 2, spec, init, &store);
        for (const auto& name : {"b_f", "b_phi", "b_u1", "b_u2"}) {
            Tensor t = store.get(name);
            for (auto& v : t.data()) v = rng.uniform(-0.5, 0.5);
        }
        const Tensor weight = test::random_tensor({5, 3}, rng);
        std::vector<Tensor> params;
        for (const auto& [name, t] : store) params.push_back(t);
        Tensor x = test::leaf(b.features.detach());
        params.push_back(x);
        auto loss = [&] {
            Rng drop(0);
            const auto out = forward_layer(b, x, p, spec, 0.1, false, drop);
            return ops::add(ops::sum(ops::mul(out.features, weight)), ops::sum(ops::sin(out.edge_messages)));
        };
        const auto r = test::grad_check(loss, params);
        EXPECT_LT(r.max_rel_error, 1e-4) << to_string(mode) << " " << r.worst;
    }
}

}  // namespace
}  // namespace msh
