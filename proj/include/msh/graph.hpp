#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "msh/segments.hpp"
#include "msh/tensor.hpp"

namespace msh {

struct Edge {
    std::size_t src = 0;
    std::size_t dst = 0;
    auto operator<=>(const Edge&) const = default;
};

/// Directed graph with a dense node-feature matrix.
///
/// Invariants: edge endpoints < num_nodes, features has num_nodes rows, and no
/// self-loops unless a caller inserted them explicitly.
struct Graph {
    std::size_t num_nodes = 0;
    std::vector<Edge> edges;
    Tensor features{Shape{0, 0}};
    std::optional<std::size_t> graph_label;
    std::vector<std::size_t> node_labels;

    std::size_t feature_dim() const { return features.dim() == 2 ? features.shape()[1] : 0; }
    /// Throws IndexError / DimensionError when an invariant does not hold.
    void validate() const;
};

/// Expands each undirected pair into both directions, sorted by (src, dst).
/// An empty `features` tensor means "no features yet" (N x 0).
Graph from_undirected_edges(std::size_t num_nodes, const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                            Tensor features = Tensor(Shape{0, 0}));

std::vector<std::size_t> in_degrees(const Graph& g);
std::size_t max_in_degree(const Graph& g);

/// Replaces features with one-hot in-degree rows of width max_degree + 1.
Graph degree_one_hot(const Graph& g, std::size_t max_degree);

/// Relabels node v as perm[v]: edges are mapped and re-sorted, feature and
/// node-label rows move with their nodes.
Graph permute_nodes(const Graph& g, const std::vector<std::size_t>& perm);

/// Structural equality: node count, edge multiset, features, labels.
bool same_graph(const Graph& a, const Graph& b);

/// Disjoint union of graphs with per-node graph ownership.
struct GraphBatch {
    std::size_t num_nodes = 0;
    std::size_t num_graphs = 0;
    std::vector<Edge> edges;
    Tensor features{Shape{0, 0}};
    std::vector<std::size_t> graph_of_node;
    std::vector<std::size_t> node_offset;  // num_graphs + 1
    std::vector<std::size_t> labels;       // graph labels, when every graph has one

    SegmentsPtr src;       // edge -> source node
    SegmentsPtr dst;       // edge -> destination node
    SegmentsPtr by_graph;  // node -> graph

    // Edge set with one self-loop per node appended, used by the GCN/GAT baselines.
    SegmentsPtr loop_src;
    SegmentsPtr loop_dst;
    Tensor gcn_norm{Shape{0}};  // 1 / sqrt(deg~(src) deg~(dst)) per looped edge

    std::size_t num_edges() const { return edges.size(); }
    std::size_t nodes_in(std::size_t graph) const { return node_offset[graph + 1] - node_offset[graph]; }
};

/// Throws ContractError for an empty list and DimensionError when feature
/// widths differ.
GraphBatch batch(std::span<const Graph* const> graphs);
GraphBatch batch(const std::vector<Graph>& graphs);
GraphBatch batch_indices(const std::vector<Graph>& graphs, std::span<const std::size_t> indices);

struct DatasetSplit {
    std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> folds;  // (train, test)
};

/// Label-stratified k-fold assignment: every index lands in exactly one test
/// fold and each class is spread over the folds within +-1.
DatasetSplit stratified_kfold(const std::vector<std::size_t>& labels, std::size_t k, std::uint64_t seed);

/// Single stratified train/test split holding out round(fraction * count) per class.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(const std::vector<std::size_t>& labels,
                                                                               double test_fraction,
                                                                               std::uint64_t seed);

std::vector<std::size_t> graph_labels(const std::vector<Graph>& graphs);
std::size_t num_classes(const std::vector<Graph>& graphs);

}  // namespace msh
