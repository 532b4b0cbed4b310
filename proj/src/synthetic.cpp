#include "msh/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "msh/errors.hpp"
#include "msh/tu_dataset.hpp"

namespace msh {

namespace {

using Pair = std::pair<std::size_t, std::size_t>;

std::vector<Pair> ring_pairs(std::size_t n) {
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < n; ++i) pairs.emplace_back(std::min(i, (i + 1) % n), std::max(i, (i + 1) % n));
    return pairs;
}

}  // namespace

Graph make_ring(std::size_t n) {
    if (n < 3) throw ContractError("ring needs n >= 3, got " + std::to_string(n));
    return from_undirected_edges(n, ring_pairs(n));
}

Graph make_chain(std::size_t n) {
    if (n < 3) throw ContractError("chain needs n >= 3, got " + std::to_string(n));
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i + 1 < n; ++i) pairs.emplace_back(i, i + 1);
    return from_undirected_edges(n, pairs);
}

bool is_connected(const Graph& g) {
    if (g.num_nodes == 0) return true;
    std::vector<std::vector<std::size_t>> adj(g.num_nodes);
    for (const auto& e : g.edges) {
        adj[e.src].push_back(e.dst);
        adj[e.dst].push_back(e.src);
    }
    std::vector<bool> seen(g.num_nodes, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    std::size_t reached = 1;
    while (!stack.empty()) {
        const auto v = stack.back();
        stack.pop_back();
        for (auto u : adj[v]) {
            if (!seen[u]) {
                seen[u] = true;
                ++reached;
                stack.push_back(u);
            }
        }
    }
    return reached == g.num_nodes;
}

Graph make_perturbed_ring(std::size_t n, double fraction, Rng& rng) {
    if (n < 5) throw ContractError("perturbed ring needs n >= 5, got " + std::to_string(n));
    if (!(fraction >= 0.0 && fraction < 1.0)) throw ContractError("rewire fraction must lie in [0, 1)");
    const auto m = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    for (int attempt = 0; attempt < 100; ++attempt) {
        const auto ring = ring_pairs(n);
        std::set<Pair> edges(ring.begin(), ring.end());
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        bool ok = true;
        for (std::size_t i = 0; i < m && ok; ++i) {
            const auto [a, b] = ring[order[i]];
            const bool keep_a = rng.bernoulli(0.5);
            const std::size_t keep = keep_a ? a : b, drop = keep_a ? b : a;
            edges.erase({a, b});
            std::vector<std::size_t> candidates;
            for (std::size_t w = 0; w < n; ++w) {
                if (w != keep && w != drop && !edges.count(std::minmax(keep, w))) candidates.push_back(w);
            }
            if (candidates.empty()) {
                ok = false;
                break;
            }
            const std::size_t w = candidates[rng.uniform_int(candidates.size())];
            edges.insert(std::minmax(keep, w));
        }
        if (!ok) continue;
        Graph g = from_undirected_edges(n, std::vector<Pair>(edges.begin(), edges.end()));
        if (is_connected(g)) return g;
    }
    throw DataError("no connected perturbed ring of " + std::to_string(n) + " nodes within 100 attempts");
}

Tensor laplacian(const Graph& g) {
    const std::size_t n = g.num_nodes;
    std::set<Edge> set(g.edges.begin(), g.edges.end());
    Tensor L({n, n});
    for (const auto& e : set) {
        if (!set.count({e.dst, e.src})) {
            throw ContractError("laplacian needs a symmetric edge set; (" + std::to_string(e.src) + ", " +
                                std::to_string(e.dst) + ") has no reverse");
        }
        if (e.src == e.dst) continue;
        L.at(e.src, e.dst) = -1.0;
        L.at(e.src, e.src) += 1.0;
    }
    return L;
}

EigenResult eigendecompose(const Tensor& symmetric) {
    if (symmetric.dim() != 2 || symmetric.shape()[0] != symmetric.shape()[1]) {
        throw DimensionError("eigendecompose needs a square matrix, got " + shape_str(symmetric.shape()));
    }
    const std::size_t n = symmetric.shape()[0];
    std::vector<double> A(symmetric.data().begin(), symmetric.data().end());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (A[i * n + j] != A[j * n + i]) throw ContractError("eigendecompose needs a symmetric matrix");
    std::vector<double> V(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) V[i * n + i] = 1.0;

    double norm2 = 0.0;
    for (double x : A) norm2 += x * x;
    const double tol2 = 1e-30 * std::max(norm2, 1.0);

    EigenResult result;
    bool converged = false;
    for (std::size_t sweep = 0; sweep <= 50; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += A[p * n + q] * A[p * n + q];
        if (off <= tol2) {
            converged = true;
            result.sweeps = sweep;
            break;
        }
        if (sweep == 50) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = A[p * n + q];
                if (apq == 0.0) continue;
                const double theta = (A[q * n + q] - A[p * n + p]) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = A[k * n + p], akq = A[k * n + q];
                    A[k * n + p] = c * akp - s * akq;
                    A[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = A[p * n + k], aqk = A[q * n + k];
                    A[p * n + k] = c * apk - s * aqk;
                    A[q * n + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = V[k * n + p], vkq = V[k * n + q];
                    V[k * n + p] = c * vkp - s * vkq;
                    V[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if (!converged) throw NumericError("Jacobi eigensolver did not converge within 50 sweeps");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return A[a * n + a] < A[b * n + b]; });
    result.eigenvectors = Tensor({n, n});
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        result.eigenvalues.push_back(A[src * n + src]);
        double sign = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (std::abs(V[i * n + src]) > 1e-9) {
                sign = V[i * n + src] > 0.0 ? 1.0 : -1.0;
                break;
            }
        }
        for (std::size_t i = 0; i < n; ++i) result.eigenvectors.at(i, j) = sign * V[i * n + src];
    }
    return result;
}

double rayleigh_quotient(const Tensor& M, std::span<const double> f) {
    const std::size_t n = f.size();
    if (M.dim() != 2 || M.shape()[0] != n || M.shape()[1] != n) {
        throw DimensionError("rayleigh_quotient: matrix " + shape_str(M.shape()) + " vs vector of " +
                             std::to_string(n));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += M.at(i, j) * f[j];
        acc += f[i] * row;
    }
    return acc;
}

Graph spectral_feature(const Graph& g, std::size_t k) {
    if (k >= g.num_nodes) {
        throw IndexError("mode " + std::to_string(k) + " out of range for " + std::to_string(g.num_nodes) + " nodes");
    }
    const auto eig = eigendecompose(laplacian(g));
    Graph out = g;
    out.features = Tensor({g.num_nodes, 1});
    for (std::size_t i = 0; i < g.num_nodes; ++i) out.features.at(i, 0) = eig.eigenvectors.at(i, k);
    return out;
}

void SyntheticSpec::validate() const {
    if (n_min < 11) throw ContractError("n_min must be at least 11, got " + std::to_string(n_min));
    if (n_max < n_min) throw ContractError("n_max must be at least n_min");
    if (num_modes == 0 || num_modes > n_min) throw ContractError("num_modes must lie in [1, n_min]");
    if (graphs_per_class == 0) throw ContractError("graphs_per_class must be positive");
    if (!(rewire >= 0.0 && rewire < 1.0)) throw ContractError("rewire fraction must lie in [0, 1)");
}

std::vector<Graph> generate_dataset(const SyntheticSpec& spec) {
    spec.validate();
    const std::size_t classes = spec.num_classes();
    std::vector<std::vector<Graph>> per_class(classes);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t c = 0; c < classes; ++c) {
        Rng rng = Rng::derive(spec.seed, c);
        const auto structure = static_cast<Structure>(c / spec.num_modes);
        const std::size_t k = c % spec.num_modes;
        for (std::size_t i = 0; i < spec.graphs_per_class; ++i) {
            const std::size_t n = rng.uniform_int(spec.n_min, spec.n_max);
            Graph g = structure == Structure::ring    ? make_ring(n)
                      : structure == Structure::chain ? make_chain(n)
                                                      : make_perturbed_ring(n, spec.rewire, rng);
            g = spectral_feature(g, k);
            g.graph_label = c;
            per_class[c].push_back(std::move(g));
        }
    }
    std::vector<Graph> out;
    out.reserve(classes * spec.graphs_per_class);
    for (auto& v : per_class)
        for (auto& g : v) out.push_back(std::move(g));
    return out;
}

void export_synthetic(const std::filesystem::path& directory, const std::string& name, const std::vector<Graph>& graphs) {
    write_tu_dataset(directory, name, graphs, TuWriteOptions{false, true});
}

}  // namespace msh
