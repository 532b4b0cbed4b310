#include "msh/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "msh/errors.hpp"
#include "msh/rng.hpp"

namespace msh {

void Graph::validate() const {
    for (const auto& e : edges) {
        if (e.src >= num_nodes || e.dst >= num_nodes) {
            throw IndexError("edge (" + std::to_string(e.src) + ", " + std::to_string(e.dst) +
                             ") out of range for " + std::to_string(num_nodes) + " nodes");
        }
    }
    if (features.dim() != 2 || features.shape()[0] != num_nodes) {
        throw DimensionError("feature matrix " + shape_str(features.shape()) + " does not have " +
                             std::to_string(num_nodes) + " rows");
    }
    if (!node_labels.empty() && node_labels.size() != num_nodes) {
        throw DimensionError("node label count does not match node count");
    }
}

Graph from_undirected_edges(std::size_t num_nodes, const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                            Tensor features) {
    Graph g;
    g.num_nodes = num_nodes;
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (auto [a, b] : pairs) {
        if (a >= num_nodes || b >= num_nodes) {
            throw IndexError("endpoint of (" + std::to_string(a) + ", " + std::to_string(b) + ") out of range for " +
                             std::to_string(num_nodes) + " nodes");
        }
        if (a == b) throw ContractError("self-loop (" + std::to_string(a) + ", " + std::to_string(a) + ")");
        if (!seen.insert(std::minmax(a, b)).second) {
            throw ContractError("duplicate undirected pair (" + std::to_string(a) + ", " + std::to_string(b) + ")");
        }
        g.edges.push_back({a, b});
        g.edges.push_back({b, a});
    }
    std::sort(g.edges.begin(), g.edges.end());
    if (features.numel() == 0 && (features.dim() != 2 || features.shape()[0] != num_nodes)) {
        g.features = Tensor(Shape{num_nodes, 0});
    } else {
        g.features = features;
    }
    g.validate();
    return g;
}

std::vector<std::size_t> in_degrees(const Graph& g) {
    std::vector<std::size_t> deg(g.num_nodes, 0);
    for (const auto& e : g.edges) ++deg[e.dst];
    return deg;
}

std::size_t max_in_degree(const Graph& g) {
    const auto deg = in_degrees(g);
    return deg.empty() ? 0 : *std::max_element(deg.begin(), deg.end());
}

Graph degree_one_hot(const Graph& g, std::size_t max_degree) {
    const auto deg = in_degrees(g);
    Graph out = g;
    out.features = Tensor(Shape{g.num_nodes, max_degree + 1});
    for (std::size_t v = 0; v < g.num_nodes; ++v) {
        if (deg[v] > max_degree) {
            throw ContractError("node " + std::to_string(v) + " has in-degree " + std::to_string(deg[v]) +
                                " above max_degree " + std::to_string(max_degree));
        }
        out.features.at(v, deg[v]) = 1.0;
    }
    return out;
}

Graph permute_nodes(const Graph& g, const std::vector<std::size_t>& perm) {
    if (perm.size() != g.num_nodes) throw ContractError("permutation size does not match node count");
    std::vector<bool> hit(g.num_nodes, false);
    for (auto p : perm) {
        if (p >= g.num_nodes || hit[p]) throw ContractError("permutation is not a bijection");
        hit[p] = true;
    }
    Graph out;
    out.num_nodes = g.num_nodes;
    out.graph_label = g.graph_label;
    out.edges.reserve(g.edges.size());
    for (const auto& e : g.edges) out.edges.push_back({perm[e.src], perm[e.dst]});
    std::sort(out.edges.begin(), out.edges.end());
    const std::size_t d = g.feature_dim();
    out.features = Tensor(Shape{g.num_nodes, d});
    for (std::size_t v = 0; v < g.num_nodes; ++v)
        for (std::size_t j = 0; j < d; ++j) out.features.at(perm[v], j) = g.features.at(v, j);
    if (!g.node_labels.empty()) {
        out.node_labels.resize(g.num_nodes);
        for (std::size_t v = 0; v < g.num_nodes; ++v) out.node_labels[perm[v]] = g.node_labels[v];
    }
    return out;
}

bool same_graph(const Graph& a, const Graph& b) {
    if (a.num_nodes != b.num_nodes || a.graph_label != b.graph_label || a.node_labels != b.node_labels) return false;
    auto ea = a.edges, eb = b.edges;
    std::sort(ea.begin(), ea.end());
    std::sort(eb.begin(), eb.end());
    if (ea != eb) return false;
    if (a.features.shape() != b.features.shape()) return false;
    return std::equal(a.features.data().begin(), a.features.data().end(), b.features.data().begin());
}

GraphBatch batch(std::span<const Graph* const> graphs) {
    if (graphs.empty()) throw ContractError("cannot batch an empty list of graphs");
    const std::size_t d = graphs[0]->feature_dim();
    GraphBatch b;
    b.num_graphs = graphs.size();
    b.node_offset.push_back(0);
    bool all_labeled = true;
    for (const Graph* g : graphs) {
        if (g->feature_dim() != d) {
            throw DimensionError("feature dimension mismatch in batch: " + std::to_string(d) + " vs " +
                                 std::to_string(g->feature_dim()));
        }
        b.num_nodes += g->num_nodes;
        b.node_offset.push_back(b.num_nodes);
        all_labeled = all_labeled && g->graph_label.has_value();
    }
    b.features = Tensor(Shape{b.num_nodes, d});
    b.graph_of_node.resize(b.num_nodes);
    std::vector<std::size_t> src, dst;
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
        const Graph& g = *graphs[gi];
        const std::size_t off = b.node_offset[gi];
        std::copy(g.features.data().begin(), g.features.data().end(), b.features.data().begin() + off * d);
        std::fill(b.graph_of_node.begin() + off, b.graph_of_node.begin() + off + g.num_nodes, gi);
        for (const auto& e : g.edges) {
            b.edges.push_back({e.src + off, e.dst + off});
            src.push_back(e.src + off);
            dst.push_back(e.dst + off);
        }
        if (all_labeled) b.labels.push_back(*g.graph_label);
    }
    b.src = make_segments(src, b.num_nodes);
    b.dst = make_segments(dst, b.num_nodes);
    b.by_graph = make_segments(b.graph_of_node, b.num_graphs);

    std::vector<double> deg(b.num_nodes, 1.0);
    for (auto v : dst) deg[v] += 1.0;
    for (std::size_t v = 0; v < b.num_nodes; ++v) {
        src.push_back(v);
        dst.push_back(v);
    }
    std::vector<double> norm(src.size());
    for (std::size_t e = 0; e < src.size(); ++e) norm[e] = 1.0 / std::sqrt(deg[src[e]] * deg[dst[e]]);
    b.gcn_norm = Tensor::vector(std::move(norm));
    b.loop_src = make_segments(std::move(src), b.num_nodes);
    b.loop_dst = make_segments(std::move(dst), b.num_nodes);
    return b;
}

GraphBatch batch(const std::vector<Graph>& graphs) {
    std::vector<const Graph*> ptrs;
    for (const auto& g : graphs) ptrs.push_back(&g);
    return batch(std::span<const Graph* const>(ptrs));
}

GraphBatch batch_indices(const std::vector<Graph>& graphs, std::span<const std::size_t> indices) {
    std::vector<const Graph*> ptrs;
    for (auto i : indices) ptrs.push_back(&graphs.at(i));
    return batch(std::span<const Graph* const>(ptrs));
}

namespace {

std::map<std::size_t, std::vector<std::size_t>> by_class(const std::vector<std::size_t>& labels, Rng& rng) {
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
    for (auto& [_, idx] : groups) rng.shuffle(idx);
    return groups;
}

}  // namespace

DatasetSplit stratified_kfold(const std::vector<std::size_t>& labels, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw ContractError("k-fold needs k >= 2");
    if (k > labels.size()) {
        throw ContractError("k = " + std::to_string(k) + " exceeds the number of graphs (" +
                            std::to_string(labels.size()) + ")");
    }
    Rng rng = Rng::derive(seed, 0x6b666f6c64);
    std::vector<std::size_t> fold_of(labels.size());
    std::size_t pos = 0;
    for (const auto& [_, idx] : by_class(labels, rng))
        for (auto i : idx) fold_of[i] = pos++ % k;
    DatasetSplit split;
    split.folds.resize(k);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (std::size_t f = 0; f < k; ++f) {
            if (fold_of[i] == f) split.folds[f].second.push_back(i);
            else split.folds[f].first.push_back(i);
        }
    }
    return split;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(const std::vector<std::size_t>& labels,
                                                                               double test_fraction,
                                                                               std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ContractError("test fraction must lie in (0, 1)");
    Rng rng = Rng::derive(seed, 0x73706c6974);
    std::vector<bool> is_test(labels.size(), false);
    for (const auto& [_, idx] : by_class(labels, rng)) {
        const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx.size())));
        for (std::size_t j = 0; j < n_test; ++j) is_test[idx[j]] = true;
    }
    std::pair<std::vector<std::size_t>, std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < labels.size(); ++i) (is_test[i] ? out.second : out.first).push_back(i);
    return out;
}

std::vector<std::size_t> graph_labels(const std::vector<Graph>& graphs) {
    std::vector<std::size_t> out;
    out.reserve(graphs.size());
    for (const auto& g : graphs) {
        if (!g.graph_label) throw DataError("graph without a label");
        out.push_back(*g.graph_label);
    }
    return out;
}

std::size_t num_classes(const std::vector<Graph>& graphs) {
    std::size_t c = 0;
    for (const auto& g : graphs)
        if (g.graph_label) c = std::max(c, *g.graph_label + 1);
    return c;
}

}  // namespace msh
