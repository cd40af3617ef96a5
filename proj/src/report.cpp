#include "backbone/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "backbone/error.hpp"

namespace backbone {

namespace {

std::size_t cat_index(Category c) {
    for (std::size_t i = 0; i < 4; ++i) {
        if (kCategoryOrder[i] == c) return i;
    }
    return 2;  // genuine
}

Category category_of(const std::unordered_map<NodeId, Category>& categories, const NodeId& id) {
    auto it = categories.find(id);
    return it == categories.end() ? Category::genuine : it->second;
}

} // namespace

std::string format_fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

std::string format_percent(double value) { return format_fixed(value, 2); }

// ---------------------------------------------------------------------------
// Presence series
// ---------------------------------------------------------------------------

double PresenceDay::pct_users(std::size_t cat_idx) const {
    if (users == 0) return 0.0;
    return 100.0 * static_cast<double>(users_by_cat[cat_idx]) / static_cast<double>(users);
}

double PresenceDay::pct_new_users(std::size_t cat_idx) const {
    if (new_users == 0) return 0.0;
    return 100.0 * static_cast<double>(new_users_by_cat[cat_idx]) /
           static_cast<double>(new_users);
}

double PresenceDay::mean_posts(std::size_t cat_idx) const {
    if (users_by_cat[cat_idx] == 0) return 0.0;
    return static_cast<double>(posts_by_cat[cat_idx]) /
           static_cast<double>(users_by_cat[cat_idx]);
}

PresenceSeries presence_series(const std::vector<InteractionRecord>& records,
                               const std::vector<DaySlice>& slices,
                               const std::unordered_map<NodeId, Category>& categories) {
    PresenceSeries series;
    std::set<NodeId> seen;
    for (const auto& slice : slices) {
        PresenceDay day;
        day.day = slice.day;
        day.tweets = slice.record_indices.size();

        std::map<NodeId, std::size_t> posts;  // per actor, this day
        for (std::size_t idx : slice.record_indices) {
            ++posts[records[idx].actor_id];
        }
        day.users = posts.size();
        for (const auto& [id, n] : posts) {
            const std::size_t ci = cat_index(category_of(categories, id));
            ++day.users_by_cat[ci];
            day.posts_by_cat[ci] += n;
            if (seen.insert(id).second) {
                ++day.new_users;
                ++day.new_users_by_cat[ci];
            }
        }
        series.days.push_back(std::move(day));
    }
    return series;
}

std::string PresenceSeries::to_csv() const {
    std::ostringstream out;
    out << "day,tweets,users";
    for (Category c : kCategoryOrder) out << ",pct_" << category_name(c);
    for (Category c : kCategoryOrder) out << ",new_pct_" << category_name(c);
    for (Category c : kCategoryOrder) out << ",mean_posts_" << category_name(c);
    out << '\n';
    for (const auto& d : days) {
        out << d.day << ',' << d.tweets << ',' << d.users;
        for (std::size_t i = 0; i < 4; ++i) out << ',' << format_percent(d.pct_users(i));
        for (std::size_t i = 0; i < 4; ++i) out << ',' << format_percent(d.pct_new_users(i));
        for (std::size_t i = 0; i < 4; ++i) out << ',' << format_percent(d.mean_posts(i));
        out << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Cross-category matrix
// ---------------------------------------------------------------------------

CrossCategoryMatrix crosstab_interactions(
    const std::vector<InteractionRecord>& records,
    const std::unordered_map<NodeId, Category>& categories) {
    CrossCategoryMatrix m;
    for (const auto& rec : records) {
        const std::size_t actor = cat_index(category_of(categories, rec.actor_id));
        ++m.activity_by_cat[actor];
        ++m.total_activity;
        if (rec.kind == InteractionKind::original) continue;
        const int kind = rec.kind == InteractionKind::retweet ? 0 : 1;
        const std::size_t target = cat_index(category_of(categories, rec.target_id));
        ++m.counts[kind][actor][target];
    }
    return m;
}

std::size_t CrossCategoryMatrix::row_total(int kind, std::size_t actor_idx) const {
    std::size_t total = 0;
    for (std::size_t t = 0; t < 4; ++t) total += counts[kind][actor_idx][t];
    return total;
}

double CrossCategoryMatrix::share(int kind, std::size_t actor_idx, std::size_t target_idx) const {
    const std::size_t total = row_total(kind, actor_idx);
    if (total == 0) return 0.0;
    return 100.0 * static_cast<double>(counts[kind][actor_idx][target_idx]) /
           static_cast<double>(total);
}

double CrossCategoryMatrix::activity_share(std::size_t cat_idx) const {
    if (total_activity == 0) return 0.0;
    return 100.0 * static_cast<double>(activity_by_cat[cat_idx]) /
           static_cast<double>(total_activity);
}

std::string CrossCategoryMatrix::to_csv() const {
    std::ostringstream out;
    out << "actor,tot_pct,retweets";
    for (Category c : kCategoryOrder) out << ",rt_pct_" << category_name(c);
    out << ",quotes";
    for (Category c : kCategoryOrder) out << ",q_pct_" << category_name(c);
    out << '\n';
    for (std::size_t a = 0; a < 4; ++a) {
        out << category_name(kCategoryOrder[a]) << ',' << format_percent(activity_share(a));
        out << ',' << row_total(0, a);
        for (std::size_t t = 0; t < 4; ++t) out << ',' << format_percent(share(0, a, t));
        out << ',' << row_total(1, a);
        for (std::size_t t = 0; t < 4; ++t) out << ',' << format_percent(share(1, a, t));
        out << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Community composition
// ---------------------------------------------------------------------------

CommunityComposition community_composition(
    const std::unordered_map<NodeId, int>& membership,
    const std::unordered_map<NodeId, Category>& categories,
    const ValidatedUserSets& validated, const Graph& retweet_graph,
    const std::vector<InteractionRecord>& records, std::size_t top_k) {
    struct Tally {
        std::size_t size = 0;
        std::size_t bots = 0, suspended = 0, verified = 0;
        std::size_t validated_bots = 0, validated_suspended = 0;
        std::size_t internal_links = 0;
        std::map<NodeId, std::size_t> verified_retweets;
    };
    std::map<int, Tally> tallies;
    for (const auto& [id, community] : membership) {
        Tally& t = tallies[community];
        ++t.size;
        switch (category_of(categories, id)) {
            case Category::bot:
                ++t.bots;
                if (validated.bots.count(id)) ++t.validated_bots;
                break;
            case Category::suspended:
                ++t.suspended;
                if (validated.suspended.count(id)) ++t.validated_suspended;
                break;
            case Category::verified:
                ++t.verified;
                break;
            default:
                break;
        }
    }

    for (const auto& [u, v] : retweet_graph.edges()) {
        auto iu = membership.find(retweet_graph.node_id(u));
        auto iv = membership.find(retweet_graph.node_id(v));
        if (iu != membership.end() && iv != membership.end() && iu->second == iv->second) {
            ++tallies[iu->second].internal_links;
        }
    }

    for (const auto& rec : records) {
        if (rec.kind != InteractionKind::retweet) continue;
        if (category_of(categories, rec.target_id) != Category::verified) continue;
        auto it = membership.find(rec.target_id);
        if (it == membership.end()) continue;
        ++tallies[it->second].verified_retweets[rec.target_id];
    }

    CommunityComposition comp;
    for (const auto& [community, t] : tallies) {
        CommunityRow row;
        row.community = community;
        row.size = t.size;
        const double size = static_cast<double>(t.size);
        row.bot_pct = 100.0 * static_cast<double>(t.bots) / size;
        row.suspended_pct = 100.0 * static_cast<double>(t.suspended) / size;
        row.verified_pct = 100.0 * static_cast<double>(t.verified) / size;
        row.no_bots = t.bots == 0;
        row.no_suspended = t.suspended == 0;
        row.validated_bot_pct =
            t.bots == 0 ? 0.0 : 100.0 * static_cast<double>(t.validated_bots) /
                                    static_cast<double>(t.bots);
        row.validated_suspended_pct =
            t.suspended == 0 ? 0.0 : 100.0 * static_cast<double>(t.validated_suspended) /
                                         static_cast<double>(t.suspended);
        row.link_density = static_cast<double>(t.internal_links) / size;

        std::vector<std::pair<NodeId, std::size_t>> ranked(t.verified_retweets.begin(),
                                                           t.verified_retweets.end());
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        for (std::size_t i = 0; i < ranked.size() && i < top_k; ++i) {
            row.top_verified.push_back(ranked[i].first);
        }
        comp.rows.push_back(std::move(row));
    }
    std::sort(comp.rows.begin(), comp.rows.end(), [](const CommunityRow& a, const CommunityRow& b) {
        if (a.size != b.size) return a.size > b.size;
        return a.community < b.community;
    });
    return comp;
}

std::string CommunityComposition::to_csv() const {
    std::ostringstream out;
    out << "community,size,top_verified,bot_pct,suspended_pct,verified_pct,"
           "validated_bot_pct,validated_suspended_pct,link_density,flags\n";
    for (const auto& r : rows) {
        out << r.community << ',' << r.size << ',';
        for (std::size_t i = 0; i < r.top_verified.size(); ++i) {
            if (i) out << ';';
            out << r.top_verified[i];
        }
        out << ',' << format_percent(r.bot_pct) << ',' << format_percent(r.suspended_pct)
            << ',' << format_percent(r.verified_pct) << ','
            << format_percent(r.validated_bot_pct) << ','
            << format_percent(r.validated_suspended_pct) << ','
            << format_fixed(r.link_density, 2) << ',';
        bool first = true;
        if (r.no_bots) {
            out << "no_bots";
            first = false;
        }
        if (r.no_suspended) {
            if (!first) out << ';';
            out << "no_suspended";
        }
        out << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Entity rankings and networks
// ---------------------------------------------------------------------------

double EntityUsage::share(std::size_t cat_idx) const {
    if (total == 0) return 0.0;
    return 100.0 * static_cast<double>(by_cat[cat_idx]) / static_cast<double>(total);
}

namespace {

const std::vector<std::string>& entity_list(const InteractionRecord& rec, EntityKind kind) {
    return kind == EntityKind::hashtag ? rec.hashtags : rec.urls;
}

} // namespace

EntityRanking top_entities(const std::vector<InteractionRecord>& records,
                           const std::unordered_map<NodeId, Category>& categories,
                           EntityKind entity, std::size_t k) {
    std::map<std::string, EntityUsage> usage;
    for (const auto& rec : records) {
        if (rec.kind != InteractionKind::retweet) continue;
        const std::size_t ci = cat_index(category_of(categories, rec.actor_id));
        std::set<std::string> dedup(entity_list(rec, entity).begin(),
                                    entity_list(rec, entity).end());
        for (const auto& e : dedup) {
            EntityUsage& u = usage[e];
            u.entity = e;
            ++u.total;
            ++u.by_cat[ci];
        }
    }

    auto rank_by = [&](std::size_t ci) {
        std::vector<EntityUsage> all;
        all.reserve(usage.size());
        for (const auto& [e, u] : usage) all.push_back(u);
        std::sort(all.begin(), all.end(), [ci](const EntityUsage& a, const EntityUsage& b) {
            const double sa = a.share(ci), sb = b.share(ci);
            if (sa != sb) return sa > sb;
            if (a.total != b.total) return a.total > b.total;
            return a.entity < b.entity;
        });
        if (all.size() > k) all.resize(k);
        return all;
    };
    EntityRanking ranking;
    ranking.top_by_bots = rank_by(cat_index(Category::bot));
    ranking.top_by_suspended = rank_by(cat_index(Category::suspended));
    return ranking;
}

std::string EntityRanking::to_csv() const {
    std::ostringstream out;
    out << "ranking,entity,total";
    for (Category c : kCategoryOrder) out << ",pct_" << category_name(c);
    out << '\n';
    auto rows = [&out](const char* tag, const std::vector<EntityUsage>& list) {
        for (const auto& u : list) {
            out << tag << ',' << u.entity << ',' << u.total;
            for (std::size_t i = 0; i < 4; ++i) out << ',' << format_percent(u.share(i));
            out << '\n';
        }
    };
    rows("bots", top_by_bots);
    rows("suspended", top_by_suspended);
    return out.str();
}

BipartiteGraph entity_bipartite(const std::vector<InteractionRecord>& records,
                                const std::unordered_map<NodeId, Category>& categories,
                                Category filter, EntityKind entity) {
    std::vector<IdEdge> edges;
    bool any_user = false;
    for (const auto& rec : records) {
        if (rec.kind != InteractionKind::retweet) continue;
        if (category_of(categories, rec.actor_id) != filter) continue;
        any_user = true;
        for (const auto& e : entity_list(rec, entity)) {
            edges.emplace_back(rec.actor_id, e);
        }
    }
    if (!any_user || edges.empty()) throw InputError("no users in category");
    return BipartiteGraph::from_edges(edges);
}

// ---------------------------------------------------------------------------
// Retweeter composition
// ---------------------------------------------------------------------------

RetweeterComposition retweeter_composition(
    const std::vector<InteractionRecord>& records,
    const std::unordered_map<NodeId, Category>& categories,
    const std::vector<NodeId>& account_ids, std::int64_t utc_offset_seconds) {
    RetweeterComposition comp;
    for (const auto& account : account_ids) {
        // day -> distinct retweeters
        std::map<std::string, std::set<NodeId>> per_day;
        for (const auto& rec : records) {
            if (rec.kind != InteractionKind::retweet || rec.target_id != account) continue;
            per_day[day_of_timestamp(rec.timestamp, utc_offset_seconds)].insert(rec.actor_id);
        }
        if (per_day.empty()) {
            comp.warnings.push_back("account never retweeted: " + account);
            comp.accounts.push_back({account, {}});
            continue;
        }
        RetweeterSeries series;
        series.account = account;
        for (const auto& [day, users] : per_day) {
            RetweeterDay d;
            d.day = day;
            d.retweeters = users.size();
            for (const auto& id : users) {
                ++d.by_cat[cat_index(category_of(categories, id))];
            }
            series.days.push_back(std::move(d));
        }
        comp.accounts.push_back(std::move(series));
    }
    return comp;
}

std::string RetweeterComposition::to_csv() const {
    std::ostringstream out;
    out << "account,day,retweeters";
    for (Category c : kCategoryOrder) out << ",pct_" << category_name(c);
    out << '\n';
    for (const auto& s : accounts) {
        for (const auto& d : s.days) {
            out << s.account << ',' << d.day << ',' << d.retweeters;
            for (std::size_t i = 0; i < 4; ++i) {
                const double pct = d.retweeters == 0
                                       ? 0.0
                                       : 100.0 * static_cast<double>(d.by_cat[i]) /
                                             static_cast<double>(d.retweeters);
                out << ',' << format_percent(pct);
            }
            out << '\n';
        }
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Activity histogram
// ---------------------------------------------------------------------------

ActivityHistogram activity_histogram(const std::vector<InteractionRecord>& records,
                                     const std::unordered_map<NodeId, Category>& categories) {
    std::map<NodeId, std::size_t> posts;
    for (const auto& rec : records) ++posts[rec.actor_id];

    ActivityHistogram hist;
    for (const auto& [id, n] : posts) {
        std::size_t bin = 0;
        while ((std::size_t{1} << (bin + 1)) <= n) ++bin;
        const std::size_t ci = cat_index(category_of(categories, id));
        if (hist.counts_by_cat[ci].size() <= bin) hist.counts_by_cat[ci].resize(bin + 1, 0);
        ++hist.counts_by_cat[ci][bin];
    }
    return hist;
}

std::string ActivityHistogram::to_csv() const {
    std::size_t bins = 0;
    for (const auto& v : counts_by_cat) bins = std::max(bins, v.size());
    std::ostringstream out;
    out << "bin_low,bin_high";
    for (Category c : kCategoryOrder) out << ',' << category_name(c);
    out << '\n';
    for (std::size_t b = 0; b < bins; ++b) {
        out << (std::size_t{1} << b) << ',' << (std::size_t{1} << (b + 1)) - 1;
        for (std::size_t i = 0; i < 4; ++i) {
            out << ',' << (b < counts_by_cat[i].size() ? counts_by_cat[i][b] : 0);
        }
        out << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------

void write_report(const std::string& csv_path, const std::string& csv,
                  const ReportMeta& meta) {
    {
        std::ofstream out(csv_path, std::ios::binary);
        if (!out) throw InputError("cannot write " + csv_path);
        out << csv;
    }
    nlohmann::json j;
    j["kind"] = meta.kind;
    if (meta.window_start) j["window_start"] = *meta.window_start;
    if (meta.window_end) j["window_end"] = *meta.window_end;
    j["cap_threshold"] = meta.cap_threshold;
    if (meta.cap_percentile) j["cap_percentile"] = *meta.cap_percentile;
    j["fdr_t"] = meta.fdr_t;
    j["utc_offset"] = meta.utc_offset;
    j["seed"] = meta.seed;
    j["n_records"] = meta.n_records;
    j["n_users"] = meta.n_users;
    std::ofstream out(csv_path + ".meta.json", std::ios::binary);
    if (!out) throw InputError("cannot write " + csv_path + ".meta.json");
    out << j.dump(2) << '\n';
}

} // namespace backbone
