#include "backbone/graph.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "backbone/error.hpp"

namespace backbone {

namespace {

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a(std::uint64_t h, const std::string& s) {
    return fnv1a(h, s.data(), s.size());
}

std::size_t sorted_intersection_size(std::span<const std::uint32_t> a,
                                     std::span<const std::uint32_t> b) {
    std::size_t n = 0, i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) {
            ++i;
        } else if (b[j] < a[i]) {
            ++j;
        } else {
            ++n;
            ++i;
            ++j;
        }
    }
    return n;
}

} // namespace

BipartiteGraph BipartiteGraph::from_edges(const std::vector<IdEdge>& edges) {
    return from_edges(edges, {}, {});
}

BipartiteGraph BipartiteGraph::from_edges(const std::vector<IdEdge>& edges,
                                          const std::vector<NodeId>& row_universe,
                                          const std::vector<NodeId>& col_universe) {
    if (edges.empty()) throw InputError("empty graph");

    BipartiteGraph g;
    auto row_of = [&g](const NodeId& id) -> std::uint32_t {
        auto it = g.row_index_.find(id);
        if (it != g.row_index_.end()) return it->second;
        std::uint32_t idx = static_cast<std::uint32_t>(g.row_ids_.size());
        g.row_ids_.push_back(id);
        g.row_index_.emplace(id, idx);
        return idx;
    };
    auto col_of = [&g](const NodeId& id) -> std::uint32_t {
        auto it = g.col_index_.find(id);
        if (it != g.col_index_.end()) return it->second;
        std::uint32_t idx = static_cast<std::uint32_t>(g.col_ids_.size());
        g.col_ids_.push_back(id);
        g.col_index_.emplace(id, idx);
        return idx;
    };

    std::vector<std::pair<std::uint32_t, std::uint32_t>> idx_edges;
    idx_edges.reserve(edges.size());
    for (const auto& [r, c] : edges) {
        if (r.empty() || c.empty()) throw InputError("empty node identifier");
        idx_edges.emplace_back(row_of(r), col_of(c));
    }

    // Universe nodes with no incident link are dropped, not indexed.
    for (const auto& id : row_universe) {
        if (!g.row_index_.count(id)) ++g.dropped_rows_;
    }
    for (const auto& id : col_universe) {
        if (!g.col_index_.count(id)) ++g.dropped_cols_;
    }

    for (const auto& id : g.row_ids_) {
        if (g.col_index_.count(id)) throw InputError("layer collision: " + id);
    }

    g.build(idx_edges);
    return g;
}

void BipartiteGraph::build(const std::vector<std::pair<std::uint32_t, std::uint32_t>>& idx_edges) {
    auto dedup = idx_edges;
    std::sort(dedup.begin(), dedup.end());
    dedup.erase(std::unique(dedup.begin(), dedup.end()), dedup.end());
    links_ = dedup.size();

    const std::size_t R = row_ids_.size(), C = col_ids_.size();
    row_offsets_.assign(R + 1, 0);
    col_offsets_.assign(C + 1, 0);
    for (const auto& [r, c] : dedup) {
        ++row_offsets_[r + 1];
        ++col_offsets_[c + 1];
    }
    for (std::size_t i = 0; i < R; ++i) row_offsets_[i + 1] += row_offsets_[i];
    for (std::size_t i = 0; i < C; ++i) col_offsets_[i + 1] += col_offsets_[i];

    row_adj_.resize(links_);
    col_adj_.resize(links_);
    std::vector<std::size_t> rpos(row_offsets_.begin(), row_offsets_.end() - 1);
    std::vector<std::size_t> cpos(col_offsets_.begin(), col_offsets_.end() - 1);
    for (const auto& [r, c] : dedup) {
        row_adj_[rpos[r]++] = c;
        col_adj_[cpos[c]++] = r;
    }
    // Row-major sorted order of `dedup` leaves row_adj_ sorted; col lists need a sort.
    for (std::size_t c = 0; c < C; ++c) {
        std::sort(col_adj_.begin() + static_cast<std::ptrdiff_t>(col_offsets_[c]),
                  col_adj_.begin() + static_cast<std::ptrdiff_t>(col_offsets_[c + 1]));
    }

    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& id : row_ids_) h = fnv1a(h, id);
    h = fnv1a(h, "|", 1);
    for (const auto& id : col_ids_) h = fnv1a(h, id);
    for (const auto& e : dedup) h = fnv1a(h, &e, sizeof(e));
    fingerprint_ = h;
}

std::optional<std::size_t> BipartiteGraph::row_index(const NodeId& id) const {
    auto it = row_index_.find(id);
    if (it == row_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> BipartiteGraph::col_index(const NodeId& id) const {
    auto it = col_index_.find(id);
    if (it == col_index_.end()) return std::nullopt;
    return it->second;
}

std::span<const std::uint32_t> BipartiteGraph::row_neighbors(std::size_t r) const {
    return {row_adj_.data() + row_offsets_[r], row_offsets_[r + 1] - row_offsets_[r]};
}

std::span<const std::uint32_t> BipartiteGraph::col_neighbors(std::size_t c) const {
    return {col_adj_.data() + col_offsets_[c], col_offsets_[c + 1] - col_offsets_[c]};
}

bool BipartiteGraph::has_link(std::size_t r, std::size_t c) const {
    auto nb = row_neighbors(r);
    return std::binary_search(nb.begin(), nb.end(), static_cast<std::uint32_t>(c));
}

DegreeSequences BipartiteGraph::degree_sequences() const {
    DegreeSequences d;
    d.row_degrees.resize(n_rows());
    d.col_degrees.resize(n_cols());
    for (std::size_t r = 0; r < n_rows(); ++r) {
        d.row_degrees[r] = static_cast<std::int64_t>(row_neighbors(r).size());
    }
    for (std::size_t c = 0; c < n_cols(); ++c) {
        d.col_degrees[c] = static_cast<std::int64_t>(col_neighbors(c).size());
    }
    return d;
}

std::size_t BipartiteGraph::v_motifs(std::size_t r, std::size_t r2) const {
    if (r == r2) throw InputError("self-similarity undefined");
    return sorted_intersection_size(row_neighbors(r), row_neighbors(r2));
}

BipartiteGraph BipartiteGraph::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    std::vector<IdEdge> edges;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw InputError("malformed edge line: " + line);
        edges.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    return from_edges(edges);
}

void BipartiteGraph::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    for (std::size_t r = 0; r < n_rows(); ++r) {
        for (std::uint32_t c : row_neighbors(r)) {
            out << row_ids_[r] << '\t' << col_ids_[c] << '\n';
        }
    }
}

Graph Graph::from_edges(const std::vector<IdEdge>& edges) {
    Graph g;
    auto index_of = [&g](const NodeId& id) -> std::uint32_t {
        auto it = g.node_index_.find(id);
        if (it != g.node_index_.end()) return it->second;
        std::uint32_t idx = static_cast<std::uint32_t>(g.node_ids_.size());
        g.node_ids_.push_back(id);
        g.node_index_.emplace(id, idx);
        return idx;
    };

    std::vector<std::pair<std::uint32_t, std::uint32_t>> idx_edges;
    idx_edges.reserve(edges.size());
    for (const auto& [a, b] : edges) {
        if (a.empty() || b.empty()) throw InputError("empty node identifier");
        std::uint32_t u = index_of(a), v = index_of(b);
        if (u == v) {
            ++g.dropped_self_edges_;
            continue;
        }
        if (u > v) std::swap(u, v);
        idx_edges.emplace_back(u, v);
    }
    std::sort(idx_edges.begin(), idx_edges.end());
    idx_edges.erase(std::unique(idx_edges.begin(), idx_edges.end()), idx_edges.end());
    g.edges_ = std::move(idx_edges);

    const std::size_t N = g.node_ids_.size();
    g.offsets_.assign(N + 1, 0);
    for (const auto& [u, v] : g.edges_) {
        ++g.offsets_[u + 1];
        ++g.offsets_[v + 1];
    }
    for (std::size_t i = 0; i < N; ++i) g.offsets_[i + 1] += g.offsets_[i];
    g.adj_.resize(2 * g.edges_.size());
    std::vector<std::size_t> pos(g.offsets_.begin(), g.offsets_.end() - 1);
    for (const auto& [u, v] : g.edges_) {
        g.adj_[pos[u]++] = v;
        g.adj_[pos[v]++] = u;
    }
    for (std::size_t i = 0; i < N; ++i) {
        std::sort(g.adj_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i]),
                  g.adj_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i + 1]));
    }
    return g;
}

std::optional<std::size_t> Graph::node_index(const NodeId& id) const {
    auto it = node_index_.find(id);
    if (it == node_index_.end()) return std::nullopt;
    return it->second;
}

std::span<const std::uint32_t> Graph::neighbors(std::size_t i) const {
    return {adj_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
}

std::size_t Graph::degree(std::size_t i) const {
    return offsets_[i + 1] - offsets_[i];
}

bool Graph::has_edge(std::size_t u, std::size_t v) const {
    auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), static_cast<std::uint32_t>(v));
}

void Graph::set_edge_weights(std::vector<double> w) {
    if (!w.empty() && w.size() != edges_.size()) {
        throw InputError("edge weight count does not match edge count");
    }
    edge_weights_ = std::move(w);
}

Graph Graph::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    std::vector<IdEdge> edges;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw InputError("malformed edge line: " + line);
        edges.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    return from_edges(edges);
}

void Graph::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    for (const auto& [u, v] : edges_) {
        out << node_ids_[u] << '\t' << node_ids_[v] << '\n';
    }
}

} // namespace backbone
