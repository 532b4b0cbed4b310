#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "msh/graph.hpp"

namespace msh {

/// Reads a dataset in the TU text format from `directory`:
///   NAME_A.txt               1-based "i, j" edge pairs (mandatory)
///   NAME_graph_indicator.txt 1-based graph id per node (mandatory)
///   NAME_graph_labels.txt    one label per graph (mandatory)
///   NAME_node_labels.txt     one label per node (optional)
///   NAME_node_attributes.txt comma-separated reals per node (optional)
///
/// Edges are symmetrized and deduplicated. Features are, in order of
/// preference: node attributes, one-hot node labels, one-hot in-degree with
/// the maximum degree taken over the whole dataset. Graph and node labels are
/// remapped to dense 0-based ids in sorted order. Throws DataError.
std::vector<Graph> load_tu_dataset(const std::filesystem::path& directory, const std::string& name);

struct TuWriteOptions {
    bool node_labels = true;      // write NAME_node_labels.txt when graphs carry them
    bool node_attributes = false; // write features as NAME_node_attributes.txt
};

/// Writes graphs in the format read by load_tu_dataset. Graph labels are
/// written as their 0-based ids; attributes use 17 significant digits.
void write_tu_dataset(const std::filesystem::path& directory, const std::string& name,
                      const std::vector<Graph>& graphs, const TuWriteOptions& options = {});

}  // namespace msh
