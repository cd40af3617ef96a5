#include "backbone/community.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "backbone/error.hpp"
#include "backbone/rng.hpp"

namespace backbone {

double modularity(const Graph& g, const std::vector<int>& labels) {
    if (g.n_edges() == 0) throw InputError("undefined modularity");
    if (labels.size() != g.n_nodes()) throw InputError("partition must cover all nodes");

    std::map<int, std::size_t> compact;
    for (int l : labels) compact.emplace(l, compact.size());
    const std::size_t k = compact.size();

    if (g.edge_weights().empty()) {
        // Integer accumulation; one division keeps rational values exact.
        std::vector<std::int64_t> intra(k, 0), deg(k, 0);
        for (const auto& [u, v] : g.edges()) {
            const std::size_t cu = compact[labels[u]], cv = compact[labels[v]];
            ++deg[cu];
            ++deg[cv];
            if (cu == cv) ++intra[cu];
        }
        const std::int64_t m = static_cast<std::int64_t>(g.n_edges());
        std::int64_t num = 0;
        for (std::size_t c = 0; c < k; ++c) {
            num += 4 * m * intra[c] - deg[c] * deg[c];
        }
        return static_cast<double>(num) / static_cast<double>(4 * m * m);
    }

    std::vector<double> intra(k, 0.0), strength(k, 0.0);
    double total = 0.0;
    for (std::size_t e = 0; e < g.n_edges(); ++e) {
        const auto& [u, v] = g.edges()[e];
        const double w = g.edge_weights()[e];
        const std::size_t cu = compact[labels[u]], cv = compact[labels[v]];
        total += w;
        strength[cu] += w;
        strength[cv] += w;
        if (cu == cv) intra[cu] += w;
    }
    double q = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        const double frac = strength[c] / (2.0 * total);
        q += intra[c] / total - frac * frac;
    }
    return q;
}

namespace {

// Weighted working graph for the aggregation levels.
struct LevelGraph {
    std::vector<std::vector<std::pair<std::uint32_t, double>>> adj;  // no self entries
    std::vector<double> self_loop;  // intra weight kept on the node
    std::vector<double> strength;   // sum of incident weights + 2 * self_loop
    double total = 0.0;             // sum of edge weights + self loops

    std::size_t size() const { return adj.size(); }
};

LevelGraph level_from_graph(const Graph& g) {
    LevelGraph lg;
    lg.adj.resize(g.n_nodes());
    lg.self_loop.assign(g.n_nodes(), 0.0);
    lg.strength.assign(g.n_nodes(), 0.0);
    const bool weighted = !g.edge_weights().empty();
    for (std::size_t e = 0; e < g.n_edges(); ++e) {
        const auto& [u, v] = g.edges()[e];
        const double w = weighted ? g.edge_weights()[e] : 1.0;
        lg.adj[u].emplace_back(v, w);
        lg.adj[v].emplace_back(u, w);
        lg.strength[u] += w;
        lg.strength[v] += w;
        lg.total += w;
    }
    return lg;
}

// One pass of local moving; returns true if any node changed community.
bool local_moving(const LevelGraph& lg, std::vector<std::uint32_t>& comm, Rng& rng) {
    const std::size_t n = lg.size();
    std::vector<double> sigma_tot(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) sigma_tot[comm[i]] += lg.strength[i];

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    const double two_m = 2.0 * lg.total;
    bool any_move = false;
    bool moved = true;
    std::vector<double> w_to(n, 0.0);
    std::vector<std::uint32_t> touched;
    int sweeps = 0;
    while (moved && sweeps < 1000) {
        moved = false;
        ++sweeps;
        for (std::size_t idx : order) {
            const std::uint32_t u = static_cast<std::uint32_t>(idx);
            const std::uint32_t old_c = comm[u];

            touched.clear();
            for (const auto& [v, w] : lg.adj[u]) {
                const std::uint32_t c = comm[v];
                if (w_to[c] == 0.0) touched.push_back(c);
                w_to[c] += w;
            }
            if (w_to[old_c] == 0.0) touched.push_back(old_c);

            sigma_tot[old_c] -= lg.strength[u];
            double best_gain = w_to[old_c] - sigma_tot[old_c] * lg.strength[u] / two_m;
            std::uint32_t best_c = old_c;
            std::sort(touched.begin(), touched.end());
            for (std::uint32_t c : touched) {
                if (c == old_c) continue;
                const double gain = w_to[c] - sigma_tot[c] * lg.strength[u] / two_m;
                if (gain > best_gain + 1e-12) {
                    best_gain = gain;
                    best_c = c;
                }
            }
            sigma_tot[best_c] += lg.strength[u];
            comm[u] = best_c;
            if (best_c != old_c) {
                moved = true;
                any_move = true;
            }
            for (std::uint32_t c : touched) w_to[c] = 0.0;
        }
    }
    return any_move;
}

LevelGraph aggregate(const LevelGraph& lg, const std::vector<std::uint32_t>& comm,
                     std::vector<std::uint32_t>& relabel) {
    relabel.assign(lg.size(), 0);
    std::map<std::uint32_t, std::uint32_t> compact;
    for (std::size_t i = 0; i < lg.size(); ++i) {
        auto [it, fresh] = compact.emplace(comm[i], static_cast<std::uint32_t>(compact.size()));
        relabel[i] = it->second;
        (void)fresh;
    }
    const std::size_t k = compact.size();

    LevelGraph next;
    next.adj.resize(k);
    next.self_loop.assign(k, 0.0);
    next.strength.assign(k, 0.0);
    next.total = lg.total;

    std::map<std::pair<std::uint32_t, std::uint32_t>, double> agg;
    for (std::size_t u = 0; u < lg.size(); ++u) {
        const std::uint32_t cu = relabel[u];
        next.self_loop[cu] += lg.self_loop[u];
        for (const auto& [v, w] : lg.adj[u]) {
            const std::uint32_t cv = relabel[v];
            if (cu == cv) {
                next.self_loop[cu] += w / 2.0;  // each intra edge visited from both ends
            } else if (cu < cv) {
                agg[{cu, cv}] += w;
            }
        }
    }
    for (const auto& [key, w] : agg) {
        next.adj[key.first].emplace_back(key.second, w);
        next.adj[key.second].emplace_back(key.first, w);
        next.strength[key.first] += w;
        next.strength[key.second] += w;
    }
    for (std::size_t c = 0; c < k; ++c) next.strength[c] += 2.0 * next.self_loop[c];
    return next;
}

std::vector<int> louvain_once(const Graph& g, Rng& rng) {
    LevelGraph level = level_from_graph(g);
    std::vector<std::uint32_t> node_to_top(g.n_nodes());
    std::iota(node_to_top.begin(), node_to_top.end(), 0);

    while (true) {
        std::vector<std::uint32_t> comm(level.size());
        std::iota(comm.begin(), comm.end(), 0);
        const bool improved = local_moving(level, comm, rng);
        std::vector<std::uint32_t> relabel;
        LevelGraph next = aggregate(level, comm, relabel);
        for (auto& t : node_to_top) t = relabel[comm[t]];
        if (!improved || next.size() == level.size()) break;
        level = std::move(next);
    }
    return {node_to_top.begin(), node_to_top.end()};
}

} // namespace

CommunityPartition louvain(const Graph& g, int n_restarts, std::uint64_t seed) {
    if (g.n_edges() == 0) throw InputError("undefined modularity");
    if (n_restarts < 1) throw InputError("restart count must be >= 1");

    CommunityPartition best;
    best.restarts = n_restarts;
    best.best_of_restarts = true;
    best.q = -2.0;
    for (int i = 0; i < n_restarts; ++i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        std::vector<int> labels = louvain_once(g, rng);
        const double q = modularity(g, labels);
        if (q > best.q) {
            best.q = q;
            best.labels = std::move(labels);
        }
    }
    return best;
}

void CommunityPartition::save(const Graph& g, const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out << g.node_id(i) << '\t' << labels[i] << '\n';
    }
}

DiscursiveLabels label_propagation(const BipartiteGraph& bg,
                                   const std::unordered_map<NodeId, int>& fixed_labels,
                                   const LabelPropagationConfig& cfg) {
    if (fixed_labels.empty()) throw InputError("empty fixed label set");
    if (cfg.n_runs < 1) throw InputError("run count must be >= 1");

    const std::size_t n_fixed = bg.n_rows(), n_free = bg.n_cols();
    std::vector<int> fixed(n_fixed);
    for (std::size_t r = 0; r < n_fixed; ++r) {
        auto it = fixed_labels.find(bg.row_id(r));
        if (it == fixed_labels.end()) {
            throw InputError("fixed labels must cover the verified layer: " + bg.row_id(r));
        }
        fixed[r] = it->second;
    }

    DiscursiveLabels out;
    out.n_runs = cfg.n_runs;
    std::vector<std::map<int, int>> outcome_counts(n_free);

    std::vector<int> labels(n_free);
    std::vector<std::size_t> order(n_free);
    std::vector<std::pair<int, int>> tally;  // label -> count, sorted by label
    for (int run = 0; run < cfg.n_runs; ++run) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(run)));
        std::fill(labels.begin(), labels.end(), DiscursiveLabels::kUnassigned);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);

        bool changed = true;
        int sweeps = 0;
        while (changed && sweeps < cfg.max_sweeps) {
            changed = false;
            ++sweeps;
            for (std::size_t c : order) {
                tally.clear();
                for (std::uint32_t r : bg.col_neighbors(c)) {
                    const int l = fixed[r];
                    auto it = std::lower_bound(tally.begin(), tally.end(),
                                               std::make_pair(l, 0));
                    if (it != tally.end() && it->first == l) {
                        ++it->second;
                    } else {
                        tally.insert(it, {l, 1});
                    }
                }
                if (tally.empty()) continue;  // no labeled neighbor
                int top = 0;
                for (const auto& [l, cnt] : tally) top = std::max(top, cnt);
                // A node already holding one of the modal labels is stable.
                bool current_modal = false;
                std::size_t n_modal = 0;
                for (const auto& [l, cnt] : tally) {
                    if (cnt != top) continue;
                    ++n_modal;
                    if (l == labels[c]) current_modal = true;
                }
                if (current_modal) continue;
                std::size_t pick = n_modal == 1 ? 0 : rng.next_below(n_modal);
                for (const auto& [l, cnt] : tally) {
                    if (cnt != top) continue;
                    if (pick == 0) {
                        labels[c] = l;
                        break;
                    }
                    --pick;
                }
                changed = true;
            }
        }
        if (changed) ++out.non_converged_runs;
        for (std::size_t c = 0; c < n_free; ++c) ++outcome_counts[c][labels[c]];
    }

    for (std::size_t r = 0; r < n_fixed; ++r) {
        out.labels[bg.row_id(r)] = fixed[r];
        out.frequency[bg.row_id(r)] = 1.0;
    }
    for (std::size_t c = 0; c < n_free; ++c) {
        int best_label = DiscursiveLabels::kUnassigned, best_count = -1;
        for (const auto& [l, cnt] : outcome_counts[c]) {
            if (cnt > best_count) {
                best_count = cnt;
                best_label = l;
            }
        }
        out.labels[bg.col_id(c)] = best_label;
        out.frequency[bg.col_id(c)] =
            static_cast<double>(best_count) / static_cast<double>(cfg.n_runs);
    }
    return out;
}

void DiscursiveLabels::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    std::vector<NodeId> ids;
    ids.reserve(labels.size());
    for (const auto& [id, l] : labels) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    char freq[32];
    for (const auto& id : ids) {
        const int l = labels.at(id);
        std::snprintf(freq, sizeof(freq), "%.4f", frequency.at(id));
        out << id << '\t';
        if (l == kUnassigned) {
            out << "unassigned";
        } else {
            out << l;
        }
        out << '\t' << freq << '\n';
    }
}

DiscursiveResult discursive_communities(const std::vector<InteractionRecord>& interactions,
                                        const ProfileSet& profiles,
                                        const DiscursiveConfig& cfg) {
    auto is_verified = [&profiles](const NodeId& id) {
        const UserProfile* p = profiles.find(id);
        return p != nullptr && p->verified;
    };

    std::vector<IdEdge> edges;
    for (const auto& rec : interactions) {
        if (rec.kind != InteractionKind::retweet) continue;
        const bool av = is_verified(rec.actor_id), tv = is_verified(rec.target_id);
        if (av == tv) continue;  // only verified-unverified ties enter
        if (av) {
            edges.emplace_back(rec.actor_id, rec.target_id);
        } else {
            edges.emplace_back(rec.target_id, rec.actor_id);
        }
    }
    if (edges.empty()) throw InputError("no verified users");

    DiscursiveResult res;
    res.bipartite = BipartiteGraph::from_edges(edges);
    res.verified_ids = res.bipartite.row_ids();

    BicmModel model = fit_bicm(res.bipartite, cfg.fit);
    ProjectionConfig pcfg;
    pcfg.t = cfg.t;
    res.verified_projection = validated_projection(res.bipartite, model, Layer::rows, pcfg);

    // Louvain labels for verified users inside the projection; everyone else
    // becomes a singleton community.
    const std::size_t n_verified = res.verified_ids.size();
    res.verified_partition.labels.assign(n_verified, DiscursiveLabels::kUnassigned);
    res.verified_partition.restarts = cfg.louvain_restarts;
    res.verified_partition.best_of_restarts = true;
    int next_label = 0;
    if (res.verified_projection.graph.n_edges() > 0) {
        CommunityPartition proj_part =
            louvain(res.verified_projection.graph, cfg.louvain_restarts, cfg.seed);
        res.verified_partition.q = proj_part.q;
        for (int l : proj_part.labels) next_label = std::max(next_label, l + 1);
        for (std::size_t i = 0; i < res.verified_projection.graph.n_nodes(); ++i) {
            const auto idx = res.bipartite.row_index(res.verified_projection.graph.node_id(i));
            res.verified_partition.labels[*idx] = proj_part.labels[i];
        }
    }
    for (std::size_t r = 0; r < n_verified; ++r) {
        if (res.verified_partition.labels[r] == DiscursiveLabels::kUnassigned) {
            res.verified_partition.labels[r] = next_label++;
        }
    }

    std::unordered_map<NodeId, int> fixed;
    for (std::size_t r = 0; r < n_verified; ++r) {
        fixed[res.verified_ids[r]] = res.verified_partition.labels[r];
    }
    LabelPropagationConfig lp;
    lp.n_runs = cfg.label_runs;
    lp.seed = derive_seed(cfg.seed, 0x9e3779b9ULL);
    res.labels = label_propagation(res.bipartite, fixed, lp);
    return res;
}

} // namespace backbone
