#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace backbone::synth {

// Planted-scenario generators backing the acceptance fixtures. Every file is
// a deterministic function of the seed. Each generator writes its inputs plus
// ground-truth sidecars computed from its own emission bookkeeping.
//
//   injection: interaction/profile logs over the 2019-11-20..2019-12-23
//     window where the daily bot share jumps from 2% to 11% at a planted
//     date, the extra bots being fresh accounts that post exactly once.
//     Sidecars: expected_presence.csv, expected_crosstab.csv,
//     ground_truth.json.
//   two_bloc: a bipartite user-hashtag graph of two planted blocs
//     (50 users x 30 hashtags each, within-bloc density 0.5, cross 0.02).
//     Files: bipartite.tsv, blocs.tsv.
//   camps: two verified-user camps whose unverified users retweet only their
//     own camp. Files: interactions.jsonl, profiles.jsonl, camps.tsv.
std::vector<std::string> generate_scenario(const std::string& name,
                                           const std::string& out_dir,
                                           std::uint64_t seed);

std::vector<std::string> generate_injection(const std::string& out_dir, std::uint64_t seed);
std::vector<std::string> generate_two_bloc(const std::string& out_dir, std::uint64_t seed);
std::vector<std::string> generate_camps(const std::string& out_dir, std::uint64_t seed);

} // namespace backbone::synth
