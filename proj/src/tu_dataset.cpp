#include "msh/tu_dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>

#include "msh/errors.hpp"

namespace msh {
namespace {

namespace fs = std::filesystem;

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.emplace_back(trim(line));
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

long long parse_int(std::string_view field, const fs::path& path, std::size_t line) {
    long long v = 0;
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (ec != std::errc() || ptr != end || field.empty()) {
        throw DataError(path.filename().string() + ":" + std::to_string(line + 1) + ": expected an integer, got '" +
                        std::string(field) + "'");
    }
    return v;
}

double parse_real(std::string_view field, const fs::path& path, std::size_t line) {
    double v = 0.0;
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (ec != std::errc() || ptr != end || field.empty()) {
        throw DataError(path.filename().string() + ":" + std::to_string(line + 1) + ": expected a real, got '" +
                        std::string(field) + "'");
    }
    return v;
}

std::vector<long long> read_ints(const fs::path& path) {
    std::vector<long long> out;
    const auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) out.push_back(parse_int(lines[i], path, i));
    return out;
}

/// Dense 0-based ids for the sorted distinct values.
std::vector<std::size_t> remap_dense(const std::vector<long long>& values, std::size_t* num_ids) {
    std::map<long long, std::size_t> ids;
    for (auto v : values) ids.emplace(v, 0);
    std::size_t next = 0;
    for (auto& [_, id] : ids) id = next++;
    if (num_ids) *num_ids = next;
    std::vector<std::size_t> out;
    out.reserve(values.size());
    for (auto v : values) out.push_back(ids.at(v));
    return out;
}

fs::path file_for(const fs::path& dir, const std::string& name, const std::string& suffix) {
    return dir / (name + "_" + suffix + ".txt");
}

fs::path require(const fs::path& path) {
    if (!fs::exists(path)) throw DataError("missing mandatory file " + path.string());
    return path;
}

}  // namespace

std::vector<Graph> load_tu_dataset(const fs::path& directory, const std::string& name) {
    const auto a_path = require(file_for(directory, name, "A"));
    const auto ind_path = require(file_for(directory, name, "graph_indicator"));
    const auto gl_path = require(file_for(directory, name, "graph_labels"));

    const auto indicator = read_ints(ind_path);
    const auto raw_labels = read_ints(gl_path);
    const std::size_t num_graphs = raw_labels.size();
    const std::size_t total_nodes = indicator.size();
    if (num_graphs == 0) throw DataError(gl_path.string() + " lists no graphs");

    std::vector<std::size_t> graph_of(total_nodes);
    std::vector<std::size_t> count(num_graphs, 0);
    for (std::size_t v = 0; v < total_nodes; ++v) {
        if (indicator[v] < 1 || static_cast<std::size_t>(indicator[v]) > num_graphs) {
            throw DataError(ind_path.filename().string() + ":" + std::to_string(v + 1) + ": graph id " +
                            std::to_string(indicator[v]) + " outside 1.." + std::to_string(num_graphs));
        }
        graph_of[v] = static_cast<std::size_t>(indicator[v] - 1);
        if (v > 0 && graph_of[v] < graph_of[v - 1]) {
            throw DataError(ind_path.filename().string() + ": node " + std::to_string(v + 1) +
                            " breaks the contiguous per-graph node ordering");
        }
        ++count[graph_of[v]];
    }
    std::vector<std::size_t> first(num_graphs, 0);
    for (std::size_t g = 1; g < num_graphs; ++g) first[g] = first[g - 1] + count[g - 1];

    std::vector<std::set<Edge>> edge_sets(num_graphs);
    const auto a_lines = read_lines(a_path);
    for (std::size_t i = 0; i < a_lines.size(); ++i) {
        const auto fields = split_fields(a_lines[i]);
        if (fields.size() != 2) {
            throw DataError(a_path.filename().string() + ":" + std::to_string(i + 1) + ": expected 'i, j'");
        }
        const long long a = parse_int(fields[0], a_path, i);
        const long long b = parse_int(fields[1], a_path, i);
        for (long long x : {a, b}) {
            if (x < 1 || static_cast<std::size_t>(x) > total_nodes) {
                throw DataError(a_path.filename().string() + ":" + std::to_string(i + 1) + ": node " +
                                std::to_string(x) + " outside 1.." + std::to_string(total_nodes));
            }
        }
        const std::size_t u = static_cast<std::size_t>(a - 1), v = static_cast<std::size_t>(b - 1);
        if (graph_of[u] != graph_of[v]) {
            throw DataError(a_path.filename().string() + ":" + std::to_string(i + 1) + ": edge (" +
                            std::to_string(a) + ", " + std::to_string(b) + ") references nodes of graphs " +
                            std::to_string(graph_of[u] + 1) + " and " + std::to_string(graph_of[v] + 1));
        }
        const std::size_t g = graph_of[u];
        edge_sets[g].insert({u - first[g], v - first[g]});
        edge_sets[g].insert({v - first[g], u - first[g]});
    }

    std::size_t num_label_ids = 0;
    const auto labels = remap_dense(raw_labels, &num_label_ids);

    std::vector<Graph> graphs(num_graphs);
    for (std::size_t g = 0; g < num_graphs; ++g) {
        graphs[g].num_nodes = count[g];
        graphs[g].edges.assign(edge_sets[g].begin(), edge_sets[g].end());
        graphs[g].graph_label = labels[g];
    }

    const auto nl_path = file_for(directory, name, "node_labels");
    std::size_t num_node_label_ids = 0;
    if (fs::exists(nl_path)) {
        const auto raw = read_ints(nl_path);
        if (raw.size() != total_nodes) {
            throw DataError(nl_path.filename().string() + " has " + std::to_string(raw.size()) +
                            " labels for " + std::to_string(total_nodes) + " nodes");
        }
        const auto dense = remap_dense(raw, &num_node_label_ids);
        for (std::size_t v = 0; v < total_nodes; ++v) graphs[graph_of[v]].node_labels.push_back(dense[v]);
    }

    const auto attr_path = file_for(directory, name, "node_attributes");
    if (fs::exists(attr_path)) {
        const auto lines = read_lines(attr_path);
        if (lines.size() != total_nodes) {
            throw DataError(attr_path.filename().string() + " has " + std::to_string(lines.size()) +
                            " rows for " + std::to_string(total_nodes) + " nodes");
        }
        std::optional<std::size_t> width;
        std::vector<double> values;
        for (std::size_t i = 0; i < lines.size(); ++i) {
            const auto fields = split_fields(lines[i]);
            if (width && *width != fields.size()) {
                throw DataError(attr_path.filename().string() + ":" + std::to_string(i + 1) + ": ragged row");
            }
            width = fields.size();
            for (auto f : fields) values.push_back(parse_real(f, attr_path, i));
        }
        for (std::size_t g = 0; g < num_graphs; ++g) {
            const auto begin = values.begin() + static_cast<std::ptrdiff_t>(first[g] * *width);
            graphs[g].features = Tensor(Shape{count[g], *width},
                                        std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(count[g] * *width)));
        }
    } else if (num_node_label_ids > 0) {
        for (auto& g : graphs) {
            g.features = Tensor(Shape{g.num_nodes, num_node_label_ids});
            for (std::size_t v = 0; v < g.num_nodes; ++v) g.features.at(v, g.node_labels[v]) = 1.0;
        }
    } else {
        std::size_t max_deg = 0;
        for (const auto& g : graphs) max_deg = std::max(max_deg, max_in_degree(g));
        for (auto& g : graphs) g = degree_one_hot(g, max_deg);
    }
    for (const auto& g : graphs) g.validate();
    return graphs;
}

void write_tu_dataset(const fs::path& directory, const std::string& name, const std::vector<Graph>& graphs,
                      const TuWriteOptions& options) {
    fs::create_directories(directory);
    auto open = [&](const std::string& suffix) {
        const auto path = file_for(directory, name, suffix);
        std::ofstream out(path);
        if (!out) throw DataError("cannot write " + path.string());
        return out;
    };
    auto a = open("A");
    auto ind = open("graph_indicator");
    auto gl = open("graph_labels");
    const bool write_labels =
        options.node_labels && std::all_of(graphs.begin(), graphs.end(), [](const Graph& g) {
            return !g.node_labels.empty() || g.num_nodes == 0;
        });
    std::ofstream nl, attr;
    if (write_labels) nl = open("node_labels");
    if (options.node_attributes) attr = open("node_attributes");

    std::size_t offset = 1;
    char buf[64];
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
        const Graph& g = graphs[gi];
        if (!g.graph_label) throw DataError("graph " + std::to_string(gi) + " has no label");
        gl << *g.graph_label << '\n';
        for (std::size_t v = 0; v < g.num_nodes; ++v) ind << gi + 1 << '\n';
        for (const auto& e : g.edges) a << e.src + offset << ", " << e.dst + offset << '\n';
        if (write_labels)
            for (auto l : g.node_labels) nl << l << '\n';
        if (options.node_attributes) {
            const std::size_t d = g.feature_dim();
            for (std::size_t v = 0; v < g.num_nodes; ++v) {
                for (std::size_t j = 0; j < d; ++j) {
                    std::snprintf(buf, sizeof buf, "%.17g", g.features.at(v, j));
                    attr << (j ? ", " : "") << buf;
                }
                attr << '\n';
            }
        }
        offset += g.num_nodes;
    }
}

}  // namespace msh
