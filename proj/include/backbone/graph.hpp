#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace backbone {

using NodeId = std::string;
using IdEdge = std::pair<NodeId, NodeId>;

// Integer degrees of both layers of a bipartite graph.
struct DegreeSequences {
    std::vector<std::int64_t> row_degrees;
    std::vector<std::int64_t> col_degrees;
};

// Sparse binary bipartite graph. Nodes are addressed by dense indices per
// layer; identifier maps are kept both ways. Immutable after construction.
class BipartiteGraph {
public:
    BipartiteGraph() = default;  // empty placeholder; build via from_edges

    // Builds from (row_id, col_id) pairs. Duplicate edges collapse to one
    // link. Throws InputError on an empty edge list, an empty identifier, or
    // an identifier appearing in both layers.
    static BipartiteGraph from_edges(const std::vector<IdEdge>& edges);

    // Same, with explicit node universes: listed nodes that carry no link are
    // dropped and counted (they cannot constrain a degree-based model).
    static BipartiteGraph from_edges(const std::vector<IdEdge>& edges,
                                     const std::vector<NodeId>& row_universe,
                                     const std::vector<NodeId>& col_universe);

    // Tab-separated edge list, one "row<TAB>col" per line, '#' comments.
    static BipartiteGraph load(const std::string& path);
    void save(const std::string& path) const;

    std::size_t n_rows() const { return row_ids_.size(); }
    std::size_t n_cols() const { return col_ids_.size(); }
    std::size_t n_links() const { return links_; }

    const NodeId& row_id(std::size_t r) const { return row_ids_[r]; }
    const NodeId& col_id(std::size_t c) const { return col_ids_[c]; }
    const std::vector<NodeId>& row_ids() const { return row_ids_; }
    const std::vector<NodeId>& col_ids() const { return col_ids_; }
    std::optional<std::size_t> row_index(const NodeId& id) const;
    std::optional<std::size_t> col_index(const NodeId& id) const;

    // Sorted opposite-layer indices.
    std::span<const std::uint32_t> row_neighbors(std::size_t r) const;
    std::span<const std::uint32_t> col_neighbors(std::size_t c) const;

    bool has_link(std::size_t r, std::size_t c) const;

    DegreeSequences degree_sequences() const;

    // Number of shared column neighbors of two distinct rows.
    // Throws InputError when r == r2.
    std::size_t v_motifs(std::size_t r, std::size_t r2) const;

    std::size_t dropped_rows() const { return dropped_rows_; }
    std::size_t dropped_cols() const { return dropped_cols_; }

    // Cheap structural hash used to check that models and projections refer
    // to the graph they were derived from.
    std::uint64_t fingerprint() const { return fingerprint_; }

private:
    void build(const std::vector<std::pair<std::uint32_t, std::uint32_t>>& idx_edges);

    std::vector<NodeId> row_ids_, col_ids_;
    std::unordered_map<NodeId, std::uint32_t> row_index_, col_index_;
    // CSR both ways, neighbor lists sorted.
    std::vector<std::size_t> row_offsets_, col_offsets_;
    std::vector<std::uint32_t> row_adj_, col_adj_;
    std::size_t links_ = 0;
    std::size_t dropped_rows_ = 0, dropped_cols_ = 0;
    std::uint64_t fingerprint_ = 0;
};

// Undirected binary monopartite graph with optional edge weights.
// Self-loops are dropped at construction and counted.
class Graph {
public:
    static Graph from_edges(const std::vector<IdEdge>& edges);

    static Graph load(const std::string& path);
    void save(const std::string& path) const;

    std::size_t n_nodes() const { return node_ids_.size(); }
    std::size_t n_edges() const { return edges_.size(); }

    const NodeId& node_id(std::size_t i) const { return node_ids_[i]; }
    const std::vector<NodeId>& node_ids() const { return node_ids_; }
    std::optional<std::size_t> node_index(const NodeId& id) const;

    std::span<const std::uint32_t> neighbors(std::size_t i) const;
    std::size_t degree(std::size_t i) const;
    bool has_edge(std::size_t u, std::size_t v) const;

    // Unique undirected edges with u < v, sorted lexicographically.
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges() const {
        return edges_;
    }

    // Per-edge weights, parallel to edges(); empty when unweighted.
    const std::vector<double>& edge_weights() const { return edge_weights_; }
    void set_edge_weights(std::vector<double> w);

    std::size_t dropped_self_edges() const { return dropped_self_edges_; }

private:
    std::vector<NodeId> node_ids_;
    std::unordered_map<NodeId, std::uint32_t> node_index_;
    std::vector<std::size_t> offsets_;
    std::vector<std::uint32_t> adj_;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges_;
    std::vector<double> edge_weights_;
    std::size_t dropped_self_edges_ = 0;
};

} // namespace backbone
