#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "backbone/graph.hpp"

namespace backbone {

enum class InteractionKind { original, retweet, quote };

// One post event. For retweets and quotes, hashtags/urls describe the shared
// content; target_id is empty for original posts.
struct InteractionRecord {
    NodeId actor_id;
    NodeId target_id;
    InteractionKind kind = InteractionKind::original;
    std::int64_t timestamp = 0;  // UTC seconds
    std::vector<std::string> hashtags;  // lowercased
    std::vector<std::string> urls;      // normalized to domain
};

struct UserProfile {
    NodeId user_id;
    bool verified = false;
    bool suspended = false;
    std::optional<double> automation_score;  // CAP in [0,1]
};

// Precedence: verified > suspended > bot > genuine.
enum class Category : std::uint8_t { verified, suspended, bot, genuine };

const char* category_name(Category c);

// Fixed presentation order used by every report (suspended, bot, genuine,
// verified).
inline constexpr Category kCategoryOrder[4] = {Category::suspended, Category::bot,
                                               Category::genuine, Category::verified};

struct ParseStats {
    std::size_t data_lines = 0;
    std::size_t malformed = 0;
};

struct InteractionLog {
    std::vector<InteractionRecord> records;  // sorted by timestamp
    ParseStats stats;
};

struct ProfileSet {
    std::vector<UserProfile> profiles;
    ParseStats stats;

    const UserProfile* find(const NodeId& id) const;
    std::unordered_map<NodeId, std::size_t> index;
};

// JSON-lines input with a '#fmt=1' header. Malformed lines are skipped and
// counted; more than 10% malformed data lines raises "corrupt input".
InteractionLog parse_interactions(const std::string& path);
ProfileSet parse_profiles(const std::string& path);

Category categorize_user(const UserProfile& p, double cap_threshold);

// Categorizes every user appearing in the records (actors and targets).
// Users with no profile default to genuine.
std::unordered_map<NodeId, Category> categorize_all(
    const std::vector<InteractionRecord>& records, const ProfileSet& profiles,
    double cap_threshold);

// Largest score value whose >=-fraction stays at or below p/100
// (nearest rank on the descending order). With N distinct scores this labels
// floor(p*N/100) of them.
double percentile_threshold(const std::vector<double>& scores, double percentile);

struct DaySlice {
    std::string day;  // YYYY-MM-DD after the UTC offset
    std::vector<std::size_t> record_indices;
};

// Calendar-day partition after applying a fixed UTC offset (seconds). Days
// with no records inside [window_start, window_end] (or inside the data's
// own span when no window is given) appear as empty slices.
std::vector<DaySlice> daily_slices(const std::vector<InteractionRecord>& records,
                                   std::int64_t utc_offset_seconds,
                                   const std::optional<std::string>& window_start = {},
                                   const std::optional<std::string>& window_end = {});

std::string day_of_timestamp(std::int64_t ts, std::int64_t utc_offset_seconds);

// Lowercase + strip scheme, userinfo, path, query and port; drops a leading
// "www.". Returns empty when nothing host-like remains.
std::string normalize_url(const std::string& url);
std::string lowercase(const std::string& s);

} // namespace backbone
