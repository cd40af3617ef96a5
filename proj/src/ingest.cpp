#include "backbone/ingest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>

#include "json.hpp"

#include "backbone/error.hpp"

namespace backbone {

const char* category_name(Category c) {
    switch (c) {
        case Category::verified: return "verified";
        case Category::suspended: return "suspended";
        case Category::bot: return "bot";
        case Category::genuine: return "genuine";
    }
    return "?";
}

const UserProfile* ProfileSet::find(const NodeId& id) const {
    auto it = index.find(id);
    return it == index.end() ? nullptr : &profiles[it->second];
}

std::string lowercase(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string normalize_url(const std::string& url) {
    std::string s = lowercase(url);
    if (auto pos = s.find("://"); pos != std::string::npos) s = s.substr(pos + 3);
    if (auto pos = s.find('@'); pos != std::string::npos) s = s.substr(pos + 1);
    for (char cut : {'/', '?', '#'}) {
        if (auto pos = s.find(cut); pos != std::string::npos) s = s.substr(0, pos);
    }
    if (auto pos = s.find(':'); pos != std::string::npos) s = s.substr(0, pos);
    if (s.rfind("www.", 0) == 0) s = s.substr(4);
    return s;
}

namespace {

bool check_format_header(std::ifstream& in, const std::string& path) {
    // Peek the first line; an explicit version header must be the known one.
    std::string first;
    if (!std::getline(in, first)) return false;  // empty file
    if (first.rfind("#fmt=", 0) == 0) {
        if (first != "#fmt=1") throw InputError("unsupported format version in " + path);
        return true;
    }
    in.seekg(0);
    return true;
}

std::optional<InteractionRecord> parse_interaction_line(const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    InteractionRecord rec;
    try {
        rec.actor_id = j.at("actor").get<std::string>();
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "original") rec.kind = InteractionKind::original;
        else if (kind == "retweet") rec.kind = InteractionKind::retweet;
        else if (kind == "quote") rec.kind = InteractionKind::quote;
        else return std::nullopt;
        if (!j.at("ts").is_number_integer()) return std::nullopt;
        rec.timestamp = j.at("ts").get<std::int64_t>();
        if (j.contains("target") && !j["target"].is_null()) {
            rec.target_id = j["target"].get<std::string>();
        }
        if (j.contains("hashtags")) {
            for (const auto& h : j["hashtags"]) rec.hashtags.push_back(lowercase(h.get<std::string>()));
        }
        if (j.contains("urls")) {
            for (const auto& u : j["urls"]) {
                std::string d = normalize_url(u.get<std::string>());
                if (!d.empty()) rec.urls.push_back(d);
            }
        }
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;
    }
    if (rec.actor_id.empty()) return std::nullopt;
    const bool needs_target = rec.kind != InteractionKind::original;
    if (needs_target && rec.target_id.empty()) return std::nullopt;
    if (!needs_target && !rec.target_id.empty()) return std::nullopt;
    return rec;
}

} // namespace

InteractionLog parse_interactions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    check_format_header(in, path);

    InteractionLog log;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        ++log.stats.data_lines;
        auto rec = parse_interaction_line(line);
        if (rec) {
            log.records.push_back(std::move(*rec));
        } else {
            ++log.stats.malformed;
        }
    }
    if (log.stats.data_lines > 0 &&
        10 * log.stats.malformed > log.stats.data_lines) {
        throw InputError("corrupt input: " + std::to_string(log.stats.malformed) + " of " +
                         std::to_string(log.stats.data_lines) + " lines malformed in " + path);
    }
    std::stable_sort(log.records.begin(), log.records.end(),
                     [](const InteractionRecord& a, const InteractionRecord& b) {
                         return a.timestamp < b.timestamp;
                     });
    return log;
}

ProfileSet parse_profiles(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    check_format_header(in, path);

    ProfileSet set;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        ++set.stats.data_lines;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j["id"].is_string() ||
            j["id"].get<std::string>().empty()) {
            ++set.stats.malformed;
            continue;
        }
        UserProfile p;
        p.user_id = j["id"].get<std::string>();
        p.verified = j.value("verified", false);
        p.suspended = j.value("suspended", false);
        if (j.contains("cap") && j["cap"].is_number()) {
            const double cap = j["cap"].get<double>();
            if (cap < 0.0 || cap > 1.0) {
                ++set.stats.malformed;
                continue;
            }
            p.automation_score = cap;
        }
        if (!set.index.emplace(p.user_id, set.profiles.size()).second) {
            // Later duplicate wins; keep one entry per user.
            set.profiles[set.index[p.user_id]] = p;
            continue;
        }
        set.profiles.push_back(std::move(p));
    }
    if (set.stats.data_lines > 0 && 10 * set.stats.malformed > set.stats.data_lines) {
        throw InputError("corrupt input: " + std::to_string(set.stats.malformed) + " of " +
                         std::to_string(set.stats.data_lines) + " lines malformed in " + path);
    }
    return set;
}

Category categorize_user(const UserProfile& p, double cap_threshold) {
    if (p.verified) return Category::verified;
    if (p.suspended) return Category::suspended;
    if (p.automation_score && *p.automation_score >= cap_threshold) return Category::bot;
    return Category::genuine;
}

std::unordered_map<NodeId, Category> categorize_all(
    const std::vector<InteractionRecord>& records, const ProfileSet& profiles,
    double cap_threshold) {
    if (!(cap_threshold > 0.0 && cap_threshold < 1.0)) {
        throw InputError("cap threshold must be in (0,1)");
    }
    std::unordered_map<NodeId, Category> cats;
    auto add = [&](const NodeId& id) {
        if (id.empty() || cats.count(id)) return;
        const UserProfile* p = profiles.find(id);
        cats.emplace(id, p ? categorize_user(*p, cap_threshold)
                           : Category::genuine);
    };
    for (const auto& r : records) {
        add(r.actor_id);
        add(r.target_id);
    }
    return cats;
}

double percentile_threshold(const std::vector<double>& scores, double percentile) {
    if (scores.empty()) throw InputError("empty score list");
    if (!(percentile > 0.0 && percentile < 100.0) && percentile != 100.0) {
        throw InputError("percentile must be in (0,100]");
    }
    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());

    const double target = percentile / 100.0;
    const double n = static_cast<double>(sorted.size());
    // Candidate thresholds are the distinct values; the >=-fraction of value
    // sorted[i] is (last index of that value + 1) / n.
    double best = std::nextafter(sorted.front(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;  // not last of run
        const double frac = static_cast<double>(i + 1) / n;
        if (frac <= target) {
            best = sorted[i];
        } else {
            break;
        }
    }
    return best;
}

std::string day_of_timestamp(std::int64_t ts, std::int64_t utc_offset_seconds) {
    using namespace std::chrono;
    const std::int64_t shifted = ts + utc_offset_seconds;
    std::int64_t d = shifted / 86400;
    if (shifted < 0 && shifted % 86400 != 0) --d;
    const year_month_day ymd{sys_days{days{d}}};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

namespace {

std::int64_t day_number(const std::string& day_str) {
    using namespace std::chrono;
    int y = 0;
    unsigned mo = 0, da = 0;
    if (std::sscanf(day_str.c_str(), "%d-%u-%u", &y, &mo, &da) != 3) {
        throw InputError("invalid day (expected YYYY-MM-DD): " + day_str);
    }
    const year_month_day ymd{year{y}, month{mo}, day{da}};
    if (!ymd.ok()) throw InputError("invalid day: " + day_str);
    return sys_days{ymd}.time_since_epoch().count();
}

} // namespace

std::vector<DaySlice> daily_slices(const std::vector<InteractionRecord>& records,
                                   std::int64_t utc_offset_seconds,
                                   const std::optional<std::string>& window_start,
                                   const std::optional<std::string>& window_end) {
    std::map<std::int64_t, std::vector<std::size_t>> by_day;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const std::int64_t shifted = records[i].timestamp + utc_offset_seconds;
        std::int64_t d = shifted / 86400;
        if (shifted < 0 && shifted % 86400 != 0) --d;
        by_day[d].push_back(i);
    }

    std::optional<std::int64_t> lo, hi;
    if (window_start) lo = day_number(*window_start);
    if (window_end) hi = day_number(*window_end);
    if (!by_day.empty()) {
        if (!lo) lo = by_day.begin()->first;
        if (!hi) hi = by_day.rbegin()->first;
    }
    std::vector<DaySlice> out;
    if (!lo || !hi || *lo > *hi) return out;

    for (std::int64_t d = *lo; d <= *hi; ++d) {
        DaySlice slice;
        slice.day = day_of_timestamp(d * 86400, 0);
        if (auto it = by_day.find(d); it != by_day.end()) {
            slice.record_indices = it->second;
        }
        out.push_back(std::move(slice));
    }
    return out;
}

} // namespace backbone
