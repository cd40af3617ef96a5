#include "backbone/projection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>
#include <unordered_map>

#include "backbone/error.hpp"

namespace backbone {

double poisson_upper_tail(std::int64_t observed, double mu) {
    if (observed <= 0) return 1.0;
    if (mu < 0.0 || !std::isfinite(mu)) throw InputError("poisson mean must be finite and >= 0");
    if (mu == 0.0) return 0.0;

    const double v = static_cast<double>(observed);
    if (v > mu) {
        // Tail terms decrease geometrically; sum upward from k = observed,
        // scaled by the leading term.
        const double log_lead = v * std::log(mu) - mu - std::lgamma(v + 1.0);
        double sum = 1.0, term = 1.0;
        double k = v;
        while (term > 1e-18 * sum) {
            term *= mu / (k + 1.0);
            sum += term;
            k += 1.0;
            if (k > v + 1e7) break;
        }
        double tail = std::exp(log_lead) * sum;
        return tail < 1.0 ? tail : 1.0;
    }
    // observed <= mu: the complement sum over k < observed is the smaller
    // side; its terms increase towards k = observed - 1.
    const double top = v - 1.0;
    const double log_lead = top * std::log(mu) - mu - std::lgamma(v);
    double sum = 1.0, term = 1.0;
    for (double k = top; k >= 1.0; k -= 1.0) {
        term *= k / mu;
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    double cdf = std::exp(log_lead) * sum;
    double tail = 1.0 - cdf;
    if (tail < 0.0) tail = 0.0;
    if (tail > 1.0) tail = 1.0;
    return tail;
}

double exact_pb_upper_tail(const std::vector<double>& probs, std::int64_t observed) {
    for (double p : probs) {
        if (!(p >= 0.0 && p <= 1.0)) throw InputError("probability outside [0,1]");
    }
    if (observed <= 0) return 1.0;
    if (observed > static_cast<std::int64_t>(probs.size())) return 0.0;

    std::vector<double> dp(probs.size() + 1, 0.0);
    dp[0] = 1.0;
    std::size_t hi = 0;
    for (double p : probs) {
        ++hi;
        for (std::size_t j = hi; j > 0; --j) {
            dp[j] = dp[j] * (1.0 - p) + dp[j - 1] * p;
        }
        dp[0] *= (1.0 - p);
    }
    double tail = 0.0;
    for (std::size_t j = probs.size(); j >= static_cast<std::size_t>(observed); --j) {
        tail += dp[j];
    }
    return tail > 1.0 ? 1.0 : tail;
}

namespace {

struct LayerView {
    const BipartiteGraph& g;
    Layer layer;

    std::size_t n_nodes() const { return layer == Layer::rows ? g.n_rows() : g.n_cols(); }
    std::size_t n_opposite() const { return layer == Layer::rows ? g.n_cols() : g.n_rows(); }
    std::span<const std::uint32_t> opposite_neighbors(std::size_t opp) const {
        return layer == Layer::rows ? g.col_neighbors(opp) : g.row_neighbors(opp);
    }
    const NodeId& id(std::size_t i) const {
        return layer == Layer::rows ? g.row_id(i) : g.col_id(i);
    }
};

BicmModel::PairNull pair_null(const BicmModel& m, Layer layer, std::size_t a, std::size_t b) {
    return layer == Layer::rows ? m.row_pair_null(a, b) : m.col_pair_null(a, b);
}

std::vector<double> pair_products(const BicmModel& m, Layer layer, std::size_t a, std::size_t b) {
    return layer == Layer::rows ? m.row_pair_products(a, b) : m.col_pair_products(a, b);
}

PairSimilarity evaluate_pair(const BicmModel& m, Layer layer, std::size_t a, std::size_t b,
                             std::int64_t observed, const ProjectionConfig& cfg) {
    PairSimilarity s;
    s.a = a;
    s.b = b;
    s.observed = observed;
    const auto null = pair_null(m, layer, a, b);
    s.poisson_mean = null.mu;
    s.lecam_bound = null.lecam_bound;
    const std::size_t opposite =
        layer == Layer::rows ? m.n_cols() : m.n_rows();
    if (observed == 0) {
        s.p_value = 1.0;
    } else if (null.lecam_bound > cfg.lecam_exact_gate && opposite <= cfg.exact_max_opposite) {
        s.exact = true;
        s.p_value = exact_pb_upper_tail(pair_products(m, layer, a, b), observed);
    } else {
        s.p_value = poisson_upper_tail(observed, null.mu);
    }
    return s;
}

} // namespace

PairSimilarity pair_pvalue(const BicmModel& m, const BipartiteGraph& g,
                           std::size_t r, std::size_t r2, Layer layer) {
    if (r == r2) throw InputError("self-similarity undefined");
    if (m.graph_fingerprint() != g.fingerprint()) {
        throw InputError("model does not match graph");
    }
    std::int64_t observed;
    if (layer == Layer::rows) {
        observed = static_cast<std::int64_t>(g.v_motifs(r, r2));
    } else {
        observed = 0;
        auto na = g.col_neighbors(r), nb = g.col_neighbors(r2);
        std::size_t i = 0, j = 0;
        while (i < na.size() && j < nb.size()) {
            if (na[i] < nb[j]) ++i;
            else if (nb[j] < na[i]) ++j;
            else { ++observed; ++i; ++j; }
        }
    }
    ProjectionConfig cfg;
    return evaluate_pair(m, layer, std::min(r, r2), std::max(r, r2), observed, cfg);
}

FdrSelection fdr_select(const std::vector<double>& p_values, double t) {
    return fdr_select(p_values, t, p_values.size());
}

FdrSelection fdr_select(const std::vector<double>& p_values, double t,
                        std::size_t n_hypotheses) {
    if (p_values.empty()) throw InputError("empty p-value list");
    if (!(t > 0.0 && t < 1.0)) throw InputError("significance level must be in (0,1)");
    if (n_hypotheses < p_values.size()) throw InputError("hypothesis count below list size");
    for (double p : p_values) {
        if (!(p >= 0.0 && p <= 1.0)) throw InputError("p-value outside [0,1]");
    }

    std::vector<std::size_t> order(p_values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (p_values[a] != p_values[b]) return p_values[a] < p_values[b];
        return a < b;
    });

    FdrSelection sel;
    sel.n_hypotheses = n_hypotheses;
    const double step = t / static_cast<double>(n_hypotheses);
    std::size_t cutoff = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const double rank = static_cast<double>(i + 1);
        if (p_values[order[i]] <= rank * step) cutoff = i + 1;
    }
    sel.cutoff_rank = cutoff;
    sel.rejected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cutoff));
    std::sort(sel.rejected.begin(), sel.rejected.end());
    return sel;
}

ValidatedProjection validated_projection(const BipartiteGraph& g, const BicmModel& m,
                                         Layer layer, const ProjectionConfig& cfg) {
    if (m.graph_fingerprint() != g.fingerprint()) {
        throw InputError("model does not match graph");
    }
    if (cfg.n_threads < 1) throw InputError("thread count must be >= 1");

    LayerView view{g, layer};
    const std::size_t n = view.n_nodes();
    const std::size_t n_opp = view.n_opposite();

    // Common-neighbor counts restricted to pairs that share at least one
    // opposite node; every other pair carries p-value 1 analytically.
    std::unordered_map<std::uint64_t, std::int64_t> motif_counts;
    for (std::size_t opp = 0; opp < n_opp; ++opp) {
        auto nbrs = view.opposite_neighbors(opp);
        for (std::size_t i = 0; i < nbrs.size(); ++i) {
            for (std::size_t j = i + 1; j < nbrs.size(); ++j) {
                const std::uint64_t key =
                    (static_cast<std::uint64_t>(nbrs[i]) << 32) | nbrs[j];
                ++motif_counts[key];
            }
        }
    }

    std::vector<PairSimilarity> pairs(motif_counts.size());
    {
        std::size_t idx = 0;
        for (const auto& [key, count] : motif_counts) {
            pairs[idx].a = static_cast<std::size_t>(key >> 32);
            pairs[idx].b = static_cast<std::size_t>(key & 0xffffffffULL);
            pairs[idx].observed = count;
            ++idx;
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const PairSimilarity& x, const PairSimilarity& y) {
        if (x.a != y.a) return x.a < y.a;
        return x.b < y.b;
    });

    auto evaluate_range = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            pairs[i] = evaluate_pair(m, layer, pairs[i].a, pairs[i].b, pairs[i].observed, cfg);
        }
    };
    if (cfg.n_threads == 1 || pairs.size() < 256) {
        evaluate_range(0, pairs.size());
    } else {
        // Fixed slots per pair: the result is identical for any thread count.
        const std::size_t nt = static_cast<std::size_t>(cfg.n_threads);
        std::vector<std::thread> workers;
        const std::size_t chunk = (pairs.size() + nt - 1) / nt;
        for (std::size_t w = 0; w < nt; ++w) {
            const std::size_t lo = w * chunk;
            const std::size_t hi = std::min(pairs.size(), lo + chunk);
            if (lo >= hi) break;
            workers.emplace_back(evaluate_range, lo, hi);
        }
        for (auto& th : workers) th.join();
    }

    const std::size_t n_pairs_total = n * (n - 1) / 2;
    ValidatedProjection out;
    out.layer = layer;
    out.t = cfg.t;
    out.n_hypotheses = n_pairs_total;
    out.n_cooccurring = pairs.size();
    out.source_fingerprint = g.fingerprint();

    if (!pairs.empty()) {
        std::vector<double> pvals(pairs.size());
        for (std::size_t i = 0; i < pairs.size(); ++i) pvals[i] = pairs[i].p_value;
        const auto sel = fdr_select(pvals, cfg.t, n_pairs_total);
        out.cutoff_rank = sel.cutoff_rank;

        std::vector<IdEdge> edges;
        std::vector<double> edge_p;
        edges.reserve(sel.rejected.size());
        for (std::size_t idx : sel.rejected) {
            edges.emplace_back(view.id(pairs[idx].a), view.id(pairs[idx].b));
        }
        if (!edges.empty()) {
            out.graph = Graph::from_edges(edges);
            // Recover per-edge p-values in the graph's canonical edge order.
            std::unordered_map<std::uint64_t, double> pv;
            for (std::size_t idx : sel.rejected) {
                const std::uint64_t key =
                    (static_cast<std::uint64_t>(pairs[idx].a) << 32) | pairs[idx].b;
                pv[key] = pairs[idx].p_value;
            }
            edge_p.reserve(out.graph.n_edges());
            for (const auto& [u, v] : out.graph.edges()) {
                // Map graph indices back to layer indices via ids.
                const NodeId& idu = out.graph.node_id(u);
                const NodeId& idv = out.graph.node_id(v);
                std::size_t a, b;
                if (layer == Layer::rows) {
                    a = *g.row_index(idu);
                    b = *g.row_index(idv);
                } else {
                    a = *g.col_index(idu);
                    b = *g.col_index(idv);
                }
                if (a > b) std::swap(a, b);
                edge_p.push_back(pv.at((static_cast<std::uint64_t>(a) << 32) | b));
            }
        }
        out.edge_p_values = std::move(edge_p);
    }
    return out;
}

void ValidatedProjection::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out.precision(17);
    for (std::size_t e = 0; e < graph.n_edges(); ++e) {
        const auto& [u, v] = graph.edges()[e];
        out << graph.node_id(u) << '\t' << graph.node_id(v) << '\t'
            << edge_p_values[e] << '\n';
    }
}

Graph backbone_graph(const BipartiteGraph& g, const ValidatedProjection& proj_rows,
                     const ValidatedProjection& proj_cols) {
    if (proj_rows.source_fingerprint != g.fingerprint() ||
        proj_cols.source_fingerprint != g.fingerprint()) {
        throw InputError("mismatched source graph");
    }
    if (proj_rows.layer != Layer::rows || proj_cols.layer != Layer::columns) {
        throw InputError("projections must cover the row and column layers");
    }

    std::vector<IdEdge> edges;
    for (const auto& [u, v] : proj_rows.graph.edges()) {
        edges.emplace_back(proj_rows.graph.node_id(u), proj_rows.graph.node_id(v));
    }
    for (const auto& [u, v] : proj_cols.graph.edges()) {
        edges.emplace_back(proj_cols.graph.node_id(u), proj_cols.graph.node_id(v));
    }
    // Original bipartite links between surviving nodes.
    for (std::size_t r = 0; r < g.n_rows(); ++r) {
        if (!proj_rows.graph.node_index(g.row_id(r))) continue;
        for (std::uint32_t c : g.row_neighbors(r)) {
            if (proj_cols.graph.node_index(g.col_id(c))) {
                edges.emplace_back(g.row_id(r), g.col_id(c));
            }
        }
    }
    if (edges.empty()) return Graph::from_edges({});
    return Graph::from_edges(edges);
}

} // namespace backbone
