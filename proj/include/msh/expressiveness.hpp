#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "msh/graph.hpp"
#include "msh/model.hpp"
#include "msh/msh_layer.hpp"
#include "msh/rng.hpp"

namespace msh {

/// Sorted (color id, node count) pairs of a stable coloring.
struct ColorHistogram {
    std::vector<std::pair<std::size_t, std::size_t>> entries;
    std::size_t rounds = 0;
    bool operator==(const ColorHistogram& other) const { return entries == other.entries; }
};

/// Dense ids for the distinct feature rows, in lexicographic row order; all
/// zero when the graph has no features.
std::vector<std::size_t> feature_colors(const Graph& g);

/// 1-WL color refinement. Each round replaces a node's color by the interned
/// pair (own color, sorted multiset of in-neighbour colors); new ids follow the
/// sorted order of the distinct signatures. Stops when the number of classes
/// stops growing or after max_rounds. Returns the final per-node colors.
std::vector<std::size_t> wl_colors(const Graph& g, std::vector<std::size_t> initial, std::size_t max_rounds,
                                   std::size_t* rounds = nullptr);

ColorHistogram wl_refine(const Graph& g, const std::vector<std::size_t>& initial, std::size_t max_rounds);
ColorHistogram wl_refine(const Graph& g);

/// Refines the disjoint union so both graphs share one color naming, then
/// compares the two histograms.
bool wl_equivalent(const Graph& g1, const Graph& g2);

/// Two 3-leaf stars with centre feature [0, 0] whose neighbour features have
/// the same mean [2/3, 2/3]: G1 = {[1,0], [0,1], [1,1]}, G2 = {[1,1], [1,1], [0,0]}.
std::pair<Graph, Graph> star_pair();

/// Graph-level embedding of one graph under parameters initialized from a seed.
using SeededEmbedder = std::function<std::vector<double>(std::uint64_t seed, const Graph& g)>;

enum class Expectation { distinct, identical };

struct DiscriminationResult {
    std::vector<double> distances;
    std::size_t hits = 0;  // seeds meeting the expectation
    bool pass = false;
};

/// Per seed in [0, num_seeds): ||emb(g1) - emb(g2)||_2. `distinct` passes when
/// the distance exceeds 1e-6 in at least 90% of seeds, `identical` when it is
/// below 1e-9 in every seed.
DiscriminationResult discrimination_test(const SeededEmbedder& embed, const Graph& g1, const Graph& g2,
                                         std::size_t num_seeds, Expectation expect);

/// True when every pair embeds within 1e-7 for each seed. Throws
/// ContractError for a pair that is not 1-WL-equivalent.
bool wl_upper_bound_check(const SeededEmbedder& embed, const std::vector<std::pair<Graph, Graph>>& pairs,
                          std::size_t num_seeds = 1);

/// MSH model (attention readout unless `base` says otherwise) with in_dim
/// taken from the graph.
SeededEmbedder msh_embedder(ModelConfig base);
/// One GAT layer with a = 0, linear output, mean pooling.
SeededEmbedder zero_attention_gat_embedder(std::size_t hidden);

/// Over random p, p' in [-pi, pi]^F and shifts c, the largest deviation of
/// dot(psi(p), psi(p')) from sum_k sum_j cos(w_k (p_j - p'_j)) and from
/// dot(psi(p + c), psi(p' + c)).
double kernel_identity_check(const HarmonicSpec& spec, std::size_t F, std::size_t trials, Rng& rng);

}  // namespace msh
