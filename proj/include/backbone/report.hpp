#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "backbone/graph.hpp"
#include "backbone/ingest.hpp"

namespace backbone {

// Fixed-point percentage with two decimals, the precision used by every
// tabular report ("12.34").
std::string format_percent(double value);
std::string format_fixed(double value, int decimals);

// ---------------------------------------------------------------------------
// Presence / activity time series
// ---------------------------------------------------------------------------

struct PresenceDay {
    std::string day;
    std::size_t tweets = 0;
    std::size_t users = 0;
    std::size_t users_by_cat[4] = {0, 0, 0, 0};      // kCategoryOrder
    std::size_t new_users = 0;
    std::size_t new_users_by_cat[4] = {0, 0, 0, 0};
    std::size_t posts_by_cat[4] = {0, 0, 0, 0};

    double pct_users(std::size_t cat_idx) const;
    double pct_new_users(std::size_t cat_idx) const;
    double mean_posts(std::size_t cat_idx) const;
};

struct PresenceSeries {
    std::vector<PresenceDay> days;

    std::string to_csv() const;
};

PresenceSeries presence_series(const std::vector<InteractionRecord>& records,
                               const std::vector<DaySlice>& slices,
                               const std::unordered_map<NodeId, Category>& categories);

// ---------------------------------------------------------------------------
// Cross-category interaction matrix
// ---------------------------------------------------------------------------

struct CrossCategoryMatrix {
    // counts[kind][actor][target], kind 0 = retweet, 1 = quote.
    std::size_t counts[2][4][4] = {};
    std::size_t activity_by_cat[4] = {0, 0, 0, 0};  // all records, originals included
    std::size_t total_activity = 0;

    std::size_t row_total(int kind, std::size_t actor_idx) const;
    double share(int kind, std::size_t actor_idx, std::size_t target_idx) const;
    double activity_share(std::size_t cat_idx) const;

    std::string to_csv() const;
};

CrossCategoryMatrix crosstab_interactions(const std::vector<InteractionRecord>& records,
                                          const std::unordered_map<NodeId, Category>& categories);

// ---------------------------------------------------------------------------
// Community composition
// ---------------------------------------------------------------------------

struct ValidatedUserSets {
    std::set<NodeId> bots;       // bots surviving the user-layer projection
    std::set<NodeId> suspended;  // same for suspended users
};

struct CommunityRow {
    int community = 0;
    std::size_t size = 0;
    std::vector<NodeId> top_verified;  // most retweeted verified members
    double bot_pct = 0.0;
    double suspended_pct = 0.0;
    double verified_pct = 0.0;
    double validated_bot_pct = 0.0;
    double validated_suspended_pct = 0.0;
    double link_density = 0.0;  // internal links / member count
    bool no_bots = false;
    bool no_suspended = false;
};

struct CommunityComposition {
    std::vector<CommunityRow> rows;  // sorted by size, largest first

    std::string to_csv() const;
};

CommunityComposition community_composition(
    const std::unordered_map<NodeId, int>& membership,
    const std::unordered_map<NodeId, Category>& categories,
    const ValidatedUserSets& validated, const Graph& retweet_graph,
    const std::vector<InteractionRecord>& records, std::size_t top_k = 5);

// ---------------------------------------------------------------------------
// Entity usage rankings and entity networks
// ---------------------------------------------------------------------------

enum class EntityKind { hashtag, url };

struct EntityUsage {
    std::string entity;
    std::size_t total = 0;                  // retweet events carrying the entity
    std::size_t by_cat[4] = {0, 0, 0, 0};

    double share(std::size_t cat_idx) const;
};

struct EntityRanking {
    std::vector<EntityUsage> top_by_bots;
    std::vector<EntityUsage> top_by_suspended;

    std::string to_csv() const;
};

EntityRanking top_entities(const std::vector<InteractionRecord>& records,
                           const std::unordered_map<NodeId, Category>& categories,
                           EntityKind entity, std::size_t k);

// Bipartite network of one category's users against the entities they
// retweeted. Throws InputError("no users in category") when empty.
BipartiteGraph entity_bipartite(const std::vector<InteractionRecord>& records,
                                const std::unordered_map<NodeId, Category>& categories,
                                Category filter, EntityKind entity);

// ---------------------------------------------------------------------------
// Per-account retweeter composition
// ---------------------------------------------------------------------------

struct RetweeterDay {
    std::string day;
    std::size_t retweeters = 0;             // distinct retweeting users
    std::size_t by_cat[4] = {0, 0, 0, 0};
};

struct RetweeterSeries {
    NodeId account;
    std::vector<RetweeterDay> days;  // only days with at least one retweeter
};

struct RetweeterComposition {
    std::vector<RetweeterSeries> accounts;
    std::vector<std::string> warnings;  // accounts never retweeted

    std::string to_csv() const;
};

RetweeterComposition retweeter_composition(const std::vector<InteractionRecord>& records,
                                           const std::unordered_map<NodeId, Category>& categories,
                                           const std::vector<NodeId>& account_ids,
                                           std::int64_t utc_offset_seconds);

// ---------------------------------------------------------------------------
// Activity histogram (log2 bins starting at 1)
// ---------------------------------------------------------------------------

struct ActivityHistogram {
    // bin i covers [2^i, 2^(i+1)) posts per user
    std::vector<std::size_t> counts_by_cat[4];

    std::string to_csv() const;
};

ActivityHistogram activity_histogram(const std::vector<InteractionRecord>& records,
                                     const std::unordered_map<NodeId, Category>& categories);

// JSON metadata sidecar written next to every report CSV.
struct ReportMeta {
    std::string kind;
    std::optional<std::string> window_start, window_end;
    double cap_threshold = 0.43;
    std::optional<double> cap_percentile;
    double fdr_t = 0.05;
    std::int64_t utc_offset = 0;
    std::uint64_t seed = 0;
    std::size_t n_records = 0;
    std::size_t n_users = 0;
};

void write_report(const std::string& csv_path, const std::string& csv,
                  const ReportMeta& meta);

} // namespace backbone
