#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "backbone/graph.hpp"
#include "backbone/ingest.hpp"

namespace backbone {

// Core-periphery position of one node within a partition.
struct NodeScores {
    NodeId id;
    int community = 0;
    std::size_t degree = 0;
    std::size_t in_community_degree = 0;
    double participation = 0.0;  // 0 iff all neighbors share the node's community
    double relevance = 0.0;      // -ln of the in-community degree's empirical tail
};

// participation = 1 - sum over communities of (k_ic / k_i)^2.
// Throws InputError for an isolated node.
double participation_score(const Graph& g, const std::vector<int>& labels, std::size_t node);

// relevance = -ln P(d_j >= d_i) with the tail frequency taken over the
// node's own community, the node included (so the score is always finite).
double relevance_score(const Graph& g, const std::vector<int>& labels, std::size_t node);

// Both scores for every non-isolated node.
std::vector<NodeScores> node_scores(const Graph& g, const std::vector<int>& labels);

struct KsResult {
    double statistic = 0.0;  // sup |ECDF_a - ECDF_b|
    double p_value = 1.0;    // asymptotic, effective size n_a n_b / (n_a + n_b)
    std::size_t n_a = 0, n_b = 0;
};

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct CategoryScoreStats {
    std::size_t n = 0;
    double mean_participation = 0.0;
    double mean_relevance = 0.0;
};

struct ScorePair {
    std::string name;  // e.g. "participation_bot_vs_genuine"
    KsResult ks;
};

struct CategoryScoreReport {
    std::map<Category, CategoryScoreStats> per_category;
    std::vector<ScorePair> pairs;        // bot-vs-genuine, suspended-vs-genuine
    std::vector<std::string> warnings;   // categories with no scored nodes
};

// Per-category score means plus the two-sample comparisons of bots and
// suspended users against genuine ones.
CategoryScoreReport score_by_category(const Graph& g, const std::vector<int>& labels,
                                      const std::unordered_map<NodeId, Category>& categories);

} // namespace backbone
