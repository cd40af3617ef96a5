#include "backbone/scores.hpp"

#include <algorithm>
#include <cmath>

#include "backbone/error.hpp"

namespace backbone {

namespace {

void check_partition(const Graph& g, const std::vector<int>& labels) {
    if (labels.size() != g.n_nodes()) throw InputError("partition must cover all nodes");
}

} // namespace

double participation_score(const Graph& g, const std::vector<int>& labels, std::size_t node) {
    check_partition(g, labels);
    const auto nbrs = g.neighbors(node);
    if (nbrs.empty()) throw InputError("undefined for degree 0");

    std::map<int, std::size_t> per_community;
    for (std::uint32_t v : nbrs) ++per_community[labels[v]];
    const double k = static_cast<double>(nbrs.size());
    double sum = 0.0;
    for (const auto& [c, cnt] : per_community) {
        const double frac = static_cast<double>(cnt) / k;
        sum += frac * frac;
    }
    return 1.0 - sum;
}

double relevance_score(const Graph& g, const std::vector<int>& labels, std::size_t node) {
    check_partition(g, labels);
    const int own = labels[node];

    auto in_degree = [&](std::size_t u) {
        std::size_t d = 0;
        for (std::uint32_t v : g.neighbors(u)) {
            if (labels[v] == own) ++d;
        }
        return d;
    };
    const std::size_t d_node = in_degree(node);

    std::size_t members = 0, at_least = 0;
    for (std::size_t u = 0; u < g.n_nodes(); ++u) {
        if (labels[u] != own) continue;
        ++members;
        if (in_degree(u) >= d_node) ++at_least;
    }
    if (members == 0) throw InputError("empty community");
    const double tail = static_cast<double>(at_least) / static_cast<double>(members);
    return tail >= 1.0 ? 0.0 : -std::log(tail);
}

std::vector<NodeScores> node_scores(const Graph& g, const std::vector<int>& labels) {
    check_partition(g, labels);

    // In-community degrees once per node; per-community sorted copies give
    // the empirical tails by binary search.
    std::vector<std::size_t> in_degree(g.n_nodes(), 0);
    for (std::size_t u = 0; u < g.n_nodes(); ++u) {
        for (std::uint32_t v : g.neighbors(u)) {
            if (labels[v] == labels[u]) ++in_degree[u];
        }
    }
    std::map<int, std::vector<std::size_t>> community_degrees;
    for (std::size_t u = 0; u < g.n_nodes(); ++u) {
        community_degrees[labels[u]].push_back(in_degree[u]);
    }
    for (auto& [c, v] : community_degrees) std::sort(v.begin(), v.end());

    std::vector<NodeScores> out;
    out.reserve(g.n_nodes());
    for (std::size_t u = 0; u < g.n_nodes(); ++u) {
        if (g.degree(u) == 0) continue;
        NodeScores s;
        s.id = g.node_id(u);
        s.community = labels[u];
        s.degree = g.degree(u);
        s.in_community_degree = in_degree[u];
        s.participation = participation_score(g, labels, u);
        const auto& degs = community_degrees[labels[u]];
        const auto it = std::lower_bound(degs.begin(), degs.end(), in_degree[u]);
        const double tail = static_cast<double>(degs.end() - it) / static_cast<double>(degs.size());
        s.relevance = tail >= 1.0 ? 0.0 : -std::log(tail);
        out.push_back(std::move(s));
    }
    return out;
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw InputError("empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());

    KsResult res;
    res.n_a = a.size();
    res.n_b = b.size();
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        const double diff =
            std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb);
        if (diff > d) d = diff;
    }
    res.statistic = d;

    const double n_eff = na * nb / (na + nb);
    const double lambda = std::sqrt(n_eff) * d;
    if (lambda == 0.0) {
        res.p_value = 1.0;
        return res;
    }
    double p = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        p += sign * term;
        sign = -sign;
        if (term < 1e-18) break;
    }
    p *= 2.0;
    if (p < 0.0) p = 0.0;
    if (p > 1.0) p = 1.0;
    res.p_value = p;
    return res;
}

CategoryScoreReport score_by_category(const Graph& g, const std::vector<int>& labels,
                                      const std::unordered_map<NodeId, Category>& categories) {
    const auto scores = node_scores(g, labels);

    std::map<Category, std::vector<double>> p_by_cat, r_by_cat;
    for (const auto& s : scores) {
        auto it = categories.find(s.id);
        const Category cat = it == categories.end() ? Category::genuine : it->second;
        p_by_cat[cat].push_back(s.participation);
        r_by_cat[cat].push_back(s.relevance);
    }

    CategoryScoreReport report;
    for (Category cat : kCategoryOrder) {
        auto it = p_by_cat.find(cat);
        if (it == p_by_cat.end() || it->second.empty()) {
            report.warnings.push_back(std::string("no nodes in category ") + category_name(cat));
            continue;
        }
        CategoryScoreStats st;
        st.n = it->second.size();
        double ps = 0.0, rs = 0.0;
        for (double v : it->second) ps += v;
        for (double v : r_by_cat[cat]) rs += v;
        st.mean_participation = ps / static_cast<double>(st.n);
        st.mean_relevance = rs / static_cast<double>(st.n);
        report.per_category.emplace(cat, st);
    }

    auto add_pair = [&](Category a, Category b) {
        if (!p_by_cat.count(a) || !p_by_cat.count(b)) return;
        if (p_by_cat[a].empty() || p_by_cat[b].empty()) return;
        const std::string suffix =
            std::string(category_name(a)) + "_vs_" + category_name(b);
        report.pairs.push_back({"participation_" + suffix,
                                ks_two_sample(p_by_cat[a], p_by_cat[b])});
        report.pairs.push_back({"relevance_" + suffix,
                                ks_two_sample(r_by_cat[a], r_by_cat[b])});
    };
    add_pair(Category::bot, Category::genuine);
    add_pair(Category::suspended, Category::genuine);
    return report;
}

} // namespace backbone
