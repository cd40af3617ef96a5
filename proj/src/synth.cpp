#include "backbone/synth.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"

#include "backbone/error.hpp"
#include "backbone/ingest.hpp"
#include "backbone/report.hpp"
#include "backbone/rng.hpp"

namespace backbone::synth {

namespace {

namespace fs = std::filesystem;

std::string path_join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    return out;
}

std::string record_line(const NodeId& actor, const NodeId& target, const char* kind,
                        std::int64_t ts, const std::vector<std::string>& hashtags,
                        const std::vector<std::string>& urls) {
    nlohmann::json j;
    j["actor"] = actor;
    if (target.empty()) {
        j["target"] = nullptr;
    } else {
        j["target"] = target;
    }
    j["kind"] = kind;
    j["ts"] = ts;
    j["hashtags"] = hashtags;
    j["urls"] = urls;
    return j.dump();
}

std::int64_t day_epoch(int y, unsigned m, unsigned d) {
    using namespace std::chrono;
    return sys_days{year_month_day{year{y}, month{m}, day{d}}}.time_since_epoch().count() *
           86400;
}

struct UserPool {
    std::vector<NodeId> ids;
    Category category;
};

} // namespace

std::vector<std::string> generate_injection(const std::string& out_dir, std::uint64_t seed) {
    fs::create_directories(out_dir);
    Rng rng(derive_seed(seed, 0xA11CE));

    const std::int64_t window_start = day_epoch(2019, 11, 20);
    const int n_days = 34;  // through 2019-12-23
    const int injection_day = 16;  // 2019-12-06
    const int election_day = 22;   // 2019-12-12
    const std::size_t users_per_day = 400;
    const std::size_t verified_per_day = 8;

    auto make_pool = [](const char* prefix, std::size_t n, Category cat) {
        UserPool pool;
        pool.category = cat;
        char buf[32];
        for (std::size_t i = 0; i < n; ++i) {
            std::snprintf(buf, sizeof(buf), "%s%04zu", prefix, i);
            pool.ids.push_back(buf);
        }
        return pool;
    };
    UserPool genuine = make_pool("g", 1200, Category::genuine);
    UserPool old_bots = make_pool("b", 16, Category::bot);
    UserPool suspended = make_pool("s", 90, Category::suspended);
    UserPool verified = make_pool("v", 10, Category::verified);

    const std::vector<std::string> hashtag_pool = {
        "#brexit", "#ge2019", "#votecorbyn", "#conservativewin",
        "#ukpolitics", "#trump2020", "#maga", "#nexit"};
    const std::vector<std::string> url_pool = {
        "example-news.co.uk", "breaking.example.com", "blog.example.org"};

    std::map<NodeId, Category> all_categories;
    for (const UserPool* p : {&genuine, &old_bots, &suspended, &verified}) {
        for (const auto& id : p->ids) all_categories[id] = p->category;
    }

    // Emission bookkeeping: the sidecar values come from these tallies, not
    // from the report pipeline under test.
    PresenceSeries expected_presence;
    CrossCategoryMatrix expected_crosstab{};
    std::set<NodeId> ever_seen;

    auto cat_idx = [](Category c) {
        for (std::size_t i = 0; i < 4; ++i) {
            if (kCategoryOrder[i] == c) return i;
        }
        return std::size_t{2};
    };

    auto pick_target = [&](Rng& r) -> NodeId {
        const double roll = r.next_double();
        const UserPool* pool;
        if (roll < 0.40) pool = &verified;
        else if (roll < 0.90) pool = &genuine;
        else if (roll < 0.97) pool = &suspended;
        else pool = &old_bots;
        return pool->ids[r.next_below(pool->ids.size())];
    };
    auto pick_hashtags = [&](Rng& r, std::size_t max_n) {
        std::vector<std::string> out;
        const std::size_t n = r.next_below(max_n + 1);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& h = hashtag_pool[r.next_below(hashtag_pool.size())];
            if (std::find(out.begin(), out.end(), h) == out.end()) out.push_back(h);
        }
        return out;
    };
    auto pick_urls = [&](Rng& r) {
        std::vector<std::string> out;
        if (r.next_double() < 0.2) out.push_back(url_pool[r.next_below(url_pool.size())]);
        return out;
    };

    const std::string interactions_path = path_join(out_dir, "interactions.jsonl");
    auto interactions = open_out(interactions_path);
    interactions << "#fmt=1\n";

    std::size_t next_new_bot = 0;
    for (int d = 0; d < n_days; ++d) {
        const std::int64_t day_start = window_start + static_cast<std::int64_t>(d) * 86400;
        const bool injected = d >= injection_day;
        const bool post_election = d >= election_day;
        const std::size_t bots_today = injected ? 44 : 8;  // 11% vs 2% of 400
        const std::size_t suspended_today = post_election ? 36 : 24;  // 9% vs 6%
        const std::size_t old_bots_today = 8;
        const std::size_t new_bots_today = bots_today - old_bots_today;
        const std::size_t genuine_today =
            users_per_day - bots_today - suspended_today - verified_per_day;

        struct ActiveUser {
            NodeId id;
            Category category;
            bool single_post_bot = false;
        };
        std::vector<ActiveUser> active;
        auto sample_from = [&](UserPool& pool, std::size_t n) {
            rng.shuffle(pool.ids);
            for (std::size_t i = 0; i < n; ++i) {
                active.push_back({pool.ids[i], pool.category, false});
            }
        };
        sample_from(genuine, genuine_today);
        sample_from(old_bots, old_bots_today);
        sample_from(suspended, suspended_today);
        sample_from(verified, verified_per_day);
        for (std::size_t i = 0; i < new_bots_today; ++i) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "nb%05zu", next_new_bot++);
            active.push_back({buf, Category::bot, true});
            all_categories[buf] = Category::bot;
        }
        rng.shuffle(active);

        PresenceDay today;
        today.day = day_of_timestamp(day_start, 0);

        std::int64_t ts = day_start;
        for (const auto& user : active) {
            const std::size_t ci = cat_idx(user.category);
            ++today.users;
            ++today.users_by_cat[ci];
            if (ever_seen.insert(user.id).second) {
                ++today.new_users;
                ++today.new_users_by_cat[ci];
            }

            std::size_t n_posts;
            double p_original, p_retweet;
            if (user.single_post_bot) {
                n_posts = 1;
                p_original = 0.0;
                p_retweet = 1.0;
            } else {
                switch (user.category) {
                    case Category::genuine:
                        n_posts = 1 + rng.next_below(4);
                        p_original = 0.3;
                        p_retweet = 0.6;
                        break;
                    case Category::bot:
                        n_posts = 2 + rng.next_below(3);
                        p_original = 0.1;
                        p_retweet = 0.8;
                        break;
                    case Category::suspended:
                        n_posts = 3 + rng.next_below(4);
                        p_original = 0.1;
                        p_retweet = 0.7;
                        break;
                    case Category::verified:
                    default:
                        n_posts = 1 + rng.next_below(3);
                        p_original = 0.7;
                        p_retweet = 0.2;
                        break;
                }
            }
            today.posts_by_cat[ci] += n_posts;
            today.tweets += n_posts;

            for (std::size_t post = 0; post < n_posts; ++post) {
                const double roll = rng.next_double();
                const char* kind;
                NodeId target;
                if (roll < p_original) {
                    kind = "original";
                } else if (roll < p_original + p_retweet) {
                    kind = "retweet";
                    target = pick_target(rng);
                } else {
                    kind = "quote";
                    target = pick_target(rng);
                }
                const auto hashtags = pick_hashtags(rng, 2);
                const auto urls = pick_urls(rng);
                interactions << record_line(user.id, target, kind, ts++, hashtags, urls)
                             << '\n';

                ++expected_crosstab.total_activity;
                ++expected_crosstab.activity_by_cat[ci];
                if (!target.empty()) {
                    const int kind_idx = roll < p_original + p_retweet ? 0 : 1;
                    const std::size_t ti = cat_idx(all_categories.at(target));
                    ++expected_crosstab.counts[kind_idx][ci][ti];
                }
            }
        }
        expected_presence.days.push_back(std::move(today));
    }
    interactions.close();

    const std::string profiles_path = path_join(out_dir, "profiles.jsonl");
    {
        auto profiles = open_out(profiles_path);
        profiles << "#fmt=1\n";
        Rng prof_rng(derive_seed(seed, 0xF00D));
        for (const auto& [id, cat] : all_categories) {
            nlohmann::json j;
            j["id"] = id;
            j["verified"] = cat == Category::verified;
            j["suspended"] = cat == Category::suspended;
            switch (cat) {
                case Category::bot:
                    j["cap"] = 0.43 + 0.56 * prof_rng.next_double();
                    break;
                case Category::genuine:
                    // Some genuine users carry no retrievable score at all.
                    if (prof_rng.next_double() < 0.8) {
                        j["cap"] = 0.42 * prof_rng.next_double();
                    }
                    break;
                default:
                    break;  // verified/suspended accounts are never scored
            }
            profiles << j.dump() << '\n';
        }
    }

    const std::string presence_path = path_join(out_dir, "expected_presence.csv");
    open_out(presence_path) << expected_presence.to_csv();
    const std::string crosstab_path = path_join(out_dir, "expected_crosstab.csv");
    open_out(crosstab_path) << expected_crosstab.to_csv();

    const std::string truth_path = path_join(out_dir, "ground_truth.json");
    {
        nlohmann::json truth;
        truth["scenario"] = "injection";
        truth["seed"] = seed;
        truth["window_start"] = "2019-11-20";
        truth["window_end"] = "2019-12-23";
        truth["injection_day"] = "2019-12-06";
        truth["election_day"] = "2019-12-12";
        truth["users_per_day"] = users_per_day;
        truth["bot_share_before"] = 0.02;
        truth["bot_share_after"] = 0.11;
        truth["cap_threshold"] = 0.43;
        nlohmann::json cats;
        for (const auto& [id, cat] : all_categories) cats[id] = category_name(cat);
        truth["categories"] = std::move(cats);
        open_out(truth_path) << truth.dump(2) << '\n';
    }
    return {interactions_path, profiles_path, presence_path, crosstab_path, truth_path};
}

std::vector<std::string> generate_two_bloc(const std::string& out_dir, std::uint64_t seed) {
    fs::create_directories(out_dir);
    Rng rng(derive_seed(seed, 0xB10C));

    const std::size_t users_per_bloc = 50, tags_per_bloc = 30;
    const double p_in = 0.5, p_cross = 0.02;

    auto user_id = [](std::size_t i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "u%03zu", i);
        return std::string(buf);
    };
    auto tag_id = [](std::size_t i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "t%03zu", i);
        return std::string(buf);
    };

    const std::string edges_path = path_join(out_dir, "bipartite.tsv");
    {
        auto out = open_out(edges_path);
        for (std::size_t u = 0; u < 2 * users_per_bloc; ++u) {
            const std::size_t user_bloc = u / users_per_bloc;
            for (std::size_t t = 0; t < 2 * tags_per_bloc; ++t) {
                const std::size_t tag_bloc = t / tags_per_bloc;
                const double p = user_bloc == tag_bloc ? p_in : p_cross;
                if (rng.next_double() < p) {
                    out << user_id(u) << '\t' << tag_id(t) << '\n';
                }
            }
        }
    }
    const std::string blocs_path = path_join(out_dir, "blocs.tsv");
    {
        auto out = open_out(blocs_path);
        for (std::size_t u = 0; u < 2 * users_per_bloc; ++u) {
            out << user_id(u) << '\t' << (u / users_per_bloc) << '\n';
        }
        for (std::size_t t = 0; t < 2 * tags_per_bloc; ++t) {
            out << tag_id(t) << '\t' << (t / tags_per_bloc) << '\n';
        }
    }
    return {edges_path, blocs_path};
}

std::vector<std::string> generate_camps(const std::string& out_dir, std::uint64_t seed) {
    fs::create_directories(out_dir);
    Rng rng(derive_seed(seed, 0xCA3B5));

    const std::size_t verified_per_camp = 5, unverified_per_camp = 60;
    const std::int64_t base_ts = day_epoch(2019, 12, 1);

    auto verified_id = [](std::size_t camp, std::size_t i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "v%c%02zu", camp == 0 ? 'A' : 'B', i);
        return std::string(buf);
    };
    auto unverified_id = [](std::size_t camp, std::size_t i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "u%c%03zu", camp == 0 ? 'A' : 'B', i);
        return std::string(buf);
    };

    const std::string interactions_path = path_join(out_dir, "interactions.jsonl");
    std::int64_t ts = base_ts;
    {
        auto out = open_out(interactions_path);
        out << "#fmt=1\n";
        for (std::size_t camp = 0; camp < 2; ++camp) {
            for (std::size_t i = 0; i < unverified_per_camp; ++i) {
                std::vector<std::size_t> order(verified_per_camp);
                for (std::size_t v = 0; v < verified_per_camp; ++v) order[v] = v;
                rng.shuffle(order);
                const std::size_t n_targets = 3 + rng.next_below(3);  // 3..5 of 5
                for (std::size_t v = 0; v < n_targets; ++v) {
                    out << record_line(unverified_id(camp, i), verified_id(camp, order[v]),
                                       "retweet", ts++, {}, {})
                        << '\n';
                }
            }
        }
    }
    const std::string profiles_path = path_join(out_dir, "profiles.jsonl");
    {
        auto out = open_out(profiles_path);
        out << "#fmt=1\n";
        for (std::size_t camp = 0; camp < 2; ++camp) {
            for (std::size_t v = 0; v < verified_per_camp; ++v) {
                nlohmann::json j;
                j["id"] = verified_id(camp, v);
                j["verified"] = true;
                j["suspended"] = false;
                out << j.dump() << '\n';
            }
            for (std::size_t i = 0; i < unverified_per_camp; ++i) {
                nlohmann::json j;
                j["id"] = unverified_id(camp, i);
                j["verified"] = false;
                j["suspended"] = false;
                j["cap"] = 0.1;
                out << j.dump() << '\n';
            }
        }
    }
    const std::string camps_path = path_join(out_dir, "camps.tsv");
    {
        auto out = open_out(camps_path);
        for (std::size_t camp = 0; camp < 2; ++camp) {
            for (std::size_t v = 0; v < verified_per_camp; ++v) {
                out << verified_id(camp, v) << '\t' << camp << '\n';
            }
            for (std::size_t i = 0; i < unverified_per_camp; ++i) {
                out << unverified_id(camp, i) << '\t' << camp << '\n';
            }
        }
    }
    return {interactions_path, profiles_path, camps_path};
}

std::vector<std::string> generate_scenario(const std::string& name, const std::string& out_dir,
                                           std::uint64_t seed) {
    if (name == "injection") return generate_injection(out_dir, seed);
    if (name == "two_bloc") return generate_two_bloc(out_dir, seed);
    if (name == "camps") return generate_camps(out_dir, seed);
    throw InputError("unknown scenario: " + name);
}

} // namespace backbone::synth
