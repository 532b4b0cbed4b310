#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "msh/graph.hpp"
#include "msh/rng.hpp"
#include "msh/tensor.hpp"

namespace msh {

/// Cycle C_n (n >= 3) as a symmetric directed graph with no features.
Graph make_ring(std::size_t n);
/// Path P_n (n >= 3) as a symmetric directed graph with no features.
Graph make_chain(std::size_t n);

/// C_n with round(fraction * n) of its undirected edges rewired: each chosen
/// edge keeps one endpoint (coin flip) and is reconnected to a uniform node
/// that is neither the kept endpoint, the dropped endpoint, nor an existing
/// neighbour. The whole graph is resampled when it comes out disconnected;
/// throws DataError after 100 attempts.
Graph make_perturbed_ring(std::size_t n, double fraction, Rng& rng);

bool is_connected(const Graph& g);

/// L = D - A of a graph whose edge set is symmetric (ContractError otherwise).
Tensor laplacian(const Graph& g);

struct EigenResult {
    std::vector<double> eigenvalues;  // ascending
    Tensor eigenvectors;              // [n x n], column j pairs with eigenvalue j
    std::size_t sweeps = 0;
};

/// Cyclic Jacobi rotations on a symmetric matrix, at most 50 sweeps
/// (NumericError otherwise). Columns are sign-normalized so the first entry
/// with magnitude above 1e-9 is positive.
EigenResult eigendecompose(const Tensor& symmetric);

/// f^T M f.
double rayleigh_quotient(const Tensor& M, std::span<const double> f);

/// Graph whose single feature column is the k-th Laplacian eigenvector.
Graph spectral_feature(const Graph& g, std::size_t k);

struct SyntheticSpec {
    std::size_t n_min = 20;
    std::size_t n_max = 50;
    std::size_t graphs_per_class = 100;
    double rewire = 0.2;
    std::size_t num_modes = 10;
    std::uint64_t seed = 0;

    void validate() const;
    std::size_t num_classes() const { return 3 * num_modes; }
};

enum class Structure { ring = 0, chain = 1, perturbed_ring = 2 };

/// graphs_per_class graphs for every (structure, k) pair, labelled
/// num_modes * structure + k, in class-major order. Class c draws from
/// Rng::derive(seed, c), so the output does not depend on thread count.
std::vector<Graph> generate_dataset(const SyntheticSpec& spec);

/// Writes the dataset in TU format with NAME_node_attributes.txt.
void export_synthetic(const std::filesystem::path& directory, const std::string& name, const std::vector<Graph>& graphs);

}  // namespace msh
