#include "msh/expressiveness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "msh/errors.hpp"
#include "msh/ops.hpp"

namespace msh {

std::vector<std::size_t> feature_colors(const Graph& g) {
    const std::size_t d = g.feature_dim();
    std::map<std::vector<double>, std::size_t> ids;
    std::vector<std::vector<double>> rows(g.num_nodes);
    for (std::size_t v = 0; v < g.num_nodes; ++v) {
        rows[v].assign(g.features.data().begin() + v * d, g.features.data().begin() + (v + 1) * d);
        ids.emplace(rows[v], 0);
    }
    std::size_t next = 0;
    for (auto& [_, id] : ids) id = next++;
    std::vector<std::size_t> out(g.num_nodes);
    for (std::size_t v = 0; v < g.num_nodes; ++v) out[v] = ids.at(rows[v]);
    return out;
}

std::vector<std::size_t> wl_colors(const Graph& g, std::vector<std::size_t> colors, std::size_t max_rounds,
                                   std::size_t* rounds) {
    if (colors.size() != g.num_nodes) throw DimensionError("wl_colors: one initial color per node required");
    std::vector<std::vector<std::size_t>> in(g.num_nodes);
    for (const auto& e : g.edges) in[e.dst].push_back(e.src);

    auto count_classes = [](const std::vector<std::size_t>& c) {
        auto s = c;
        std::sort(s.begin(), s.end());
        return static_cast<std::size_t>(std::unique(s.begin(), s.end()) - s.begin());
    };
    std::size_t classes = count_classes(colors);
    std::size_t r = 0;
    for (; r < max_rounds; ++r) {
        using Signature = std::pair<std::size_t, std::vector<std::size_t>>;
        std::vector<Signature> sig(g.num_nodes);
        std::map<Signature, std::size_t> intern;
        for (std::size_t v = 0; v < g.num_nodes; ++v) {
            sig[v].first = colors[v];
            for (auto u : in[v]) sig[v].second.push_back(colors[u]);
            std::sort(sig[v].second.begin(), sig[v].second.end());
            intern.emplace(sig[v], 0);
        }
        std::size_t next = 0;
        for (auto& [_, id] : intern) id = next++;
        std::vector<std::size_t> refined(g.num_nodes);
        for (std::size_t v = 0; v < g.num_nodes; ++v) refined[v] = intern.at(sig[v]);
        colors = std::move(refined);
        if (next == classes) {
            ++r;
            break;
        }
        classes = next;
    }
    if (rounds) *rounds = r;
    return colors;
}

namespace {

ColorHistogram histogram(const std::vector<std::size_t>& colors, std::size_t begin, std::size_t end) {
    std::map<std::size_t, std::size_t> counts;
    for (std::size_t v = begin; v < end; ++v) ++counts[colors[v]];
    ColorHistogram h;
    h.entries.assign(counts.begin(), counts.end());
    return h;
}

}  // namespace

ColorHistogram wl_refine(const Graph& g, const std::vector<std::size_t>& initial, std::size_t max_rounds) {
    std::size_t rounds = 0;
    const auto colors = wl_colors(g, initial, max_rounds, &rounds);
    auto h = histogram(colors, 0, g.num_nodes);
    h.rounds = rounds;
    return h;
}

ColorHistogram wl_refine(const Graph& g) { return wl_refine(g, feature_colors(g), g.num_nodes + 1); }

bool wl_equivalent(const Graph& g1, const Graph& g2) {
    if (g1.num_nodes != g2.num_nodes || g1.feature_dim() != g2.feature_dim()) return false;
    Graph u;
    u.num_nodes = g1.num_nodes + g2.num_nodes;
    u.edges = g1.edges;
    for (const auto& e : g2.edges) u.edges.push_back({e.src + g1.num_nodes, e.dst + g1.num_nodes});
    const std::size_t d = g1.feature_dim();
    std::vector<double> feats(g1.features.data().begin(), g1.features.data().end());
    feats.insert(feats.end(), g2.features.data().begin(), g2.features.data().end());
    u.features = Tensor(Shape{u.num_nodes, d}, std::move(feats));
    const auto colors = wl_colors(u, feature_colors(u), u.num_nodes + 1);
    return histogram(colors, 0, g1.num_nodes) == histogram(colors, g1.num_nodes, u.num_nodes);
}

std::pair<Graph, Graph> star_pair() {
    const std::vector<std::pair<std::size_t, std::size_t>> star{{0, 1}, {0, 2}, {0, 3}};
    Graph g1 = from_undirected_edges(4, star, Tensor::matrix({{0, 0}, {1, 0}, {0, 1}, {1, 1}}));
    Graph g2 = from_undirected_edges(4, star, Tensor::matrix({{0, 0}, {1, 1}, {1, 1}, {0, 0}}));
    return {std::move(g1), std::move(g2)};
}

namespace {

double distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DimensionError("embeddings of different widths");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

}  // namespace

DiscriminationResult discrimination_test(const SeededEmbedder& embed, const Graph& g1, const Graph& g2,
                                         std::size_t num_seeds, Expectation expect) {
    if (num_seeds == 0) throw ContractError("discrimination_test needs at least one seed");
    DiscriminationResult r;
    for (std::size_t s = 0; s < num_seeds; ++s) {
        const double dist = distance(embed(s, g1), embed(s, g2));
        r.distances.push_back(dist);
        if (expect == Expectation::distinct ? dist > 1e-6 : dist < 1e-9) ++r.hits;
    }
    r.pass = expect == Expectation::distinct ? 10 * r.hits >= 9 * num_seeds : r.hits == num_seeds;
    return r;
}

bool wl_upper_bound_check(const SeededEmbedder& embed, const std::vector<std::pair<Graph, Graph>>& pairs,
                          std::size_t num_seeds) {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (!wl_equivalent(pairs[i].first, pairs[i].second)) {
            throw ContractError("pair " + std::to_string(i) + " is not 1-WL-equivalent");
        }
    }
    for (const auto& [a, b] : pairs)
        for (std::size_t s = 0; s < num_seeds; ++s)
            if (distance(embed(s, a), embed(s, b)) > 1e-7) return false;
    return true;
}

SeededEmbedder msh_embedder(ModelConfig base) {
    base.kind = ModelKind::msh;
    return [base](std::uint64_t seed, const Graph& g) {
        ModelConfig c = base;
        c.in_dim = g.feature_dim();
        const Model model(c, seed);
        const auto emb = model.forward(batch(std::vector<Graph>{g})).embedding;
        return std::vector<double>(emb.data().begin(), emb.data().end());
    };
}

SeededEmbedder zero_attention_gat_embedder(std::size_t hidden) {
    return [hidden](std::uint64_t seed, const Graph& g) {
        Rng rng = Rng::derive(seed, 0x676174);
        GatParams p = GatParams::init(g.feature_dim(), hidden, rng);
        p.a = Tensor({2 * hidden});
        const GraphBatch b = batch(std::vector<Graph>{g});
        const Tensor emb = simple_pool(gat_layer(b, b.features, p, false), b, PoolingMode::mean);
        return std::vector<double>(emb.data().begin(), emb.data().end());
    };
}

double kernel_identity_check(const HarmonicSpec& spec, std::size_t F, std::size_t trials, Rng& rng) {
    if (trials == 0) throw ContractError("kernel_identity_check needs at least one trial");
    if (spec.mode == FrequencyMode::none) throw ContractError("kernel identity needs a harmonic encoding");
    const double pi = std::numbers::pi;
    double worst = 0.0;
    auto dot = [](const Tensor& a, const Tensor& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.numel(); ++i) s += a[i] * b[i];
        return s;
    };
    for (std::size_t t = 0; t < trials; ++t) {
        std::vector<double> p(F), q(F), ps(F), qs(F);
        const double c = rng.uniform(-pi, pi);
        for (std::size_t j = 0; j < F; ++j) {
            p[j] = rng.uniform(-pi, pi);
            q[j] = rng.uniform(-pi, pi);
            ps[j] = p[j] + c;
            qs[j] = q[j] + c;
        }
        const double lhs = dot(harmonic_encode(Tensor::vector(p), spec), harmonic_encode(Tensor::vector(q), spec));
        double rhs = 0.0;
        for (double w : spec.frequencies)
            for (std::size_t j = 0; j < F; ++j) rhs += std::cos(w * (p[j] - q[j]));
        const double shifted =
            dot(harmonic_encode(Tensor::vector(ps), spec), harmonic_encode(Tensor::vector(qs), spec));
        worst = std::max({worst, std::abs(lhs - rhs), std::abs(shifted - lhs)});
    }
    return worst;
}

}  // namespace msh
