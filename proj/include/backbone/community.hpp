#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "backbone/bicm.hpp"
#include "backbone/graph.hpp"
#include "backbone/ingest.hpp"
#include "backbone/projection.hpp"

namespace backbone {

struct CommunityPartition {
    std::vector<int> labels;  // parallel to the graph's node indices
    double q = 0.0;
    int restarts = 0;
    bool best_of_restarts = false;

    void save(const Graph& g, const std::string& path) const;  // node <TAB> label
};

// Newman-Girvan modularity of a full partition. Unweighted graphs use exact
// integer accumulation with a single final division. Throws InputError on an
// edgeless graph or an incomplete partition.
double modularity(const Graph& g, const std::vector<int>& labels);

// Multi-level modularity optimization, rerun n_restarts times with shuffled
// node orders (seeded); the best-Q partition wins. Restart i depends only on
// (seed, i), so enlarging n_restarts never loses an earlier result.
CommunityPartition louvain(const Graph& g, int n_restarts = 10, std::uint64_t seed = 1);

struct LabelPropagationConfig {
    int n_runs = 1000;
    std::uint64_t seed = 1;
    int max_sweeps = 100;  // guard against label oscillation
};

struct DiscursiveLabels {
    static constexpr int kUnassigned = -1;

    std::unordered_map<NodeId, int> labels;       // fixed + propagated
    std::unordered_map<NodeId, double> frequency; // modal share across runs
    int n_runs = 0;
    int non_converged_runs = 0;

    void save(const std::string& path) const;  // node <TAB> label <TAB> frequency
};

// Extends the fixed labels of the row layer to the column layer: each run
// sweeps the column nodes in a shuffled order, assigning each the modal label
// of its neighbors (ties uniform at random) until no label changes, and the
// reported label is the modal outcome across runs. fixed_labels must cover
// the whole row layer.
DiscursiveLabels label_propagation(const BipartiteGraph& bg,
                                   const std::unordered_map<NodeId, int>& fixed_labels,
                                   const LabelPropagationConfig& cfg = {});

struct DiscursiveConfig {
    double t = 0.05;
    int louvain_restarts = 10;
    int label_runs = 1000;
    std::uint64_t seed = 1;
    FitConfig fit{};
};

struct DiscursiveResult {
    BipartiteGraph bipartite;              // verified rows x unverified columns
    ValidatedProjection verified_projection;
    std::vector<NodeId> verified_ids;      // bipartite row order
    CommunityPartition verified_partition; // labels parallel to verified_ids
    DiscursiveLabels labels;               // all users in the bipartite graph
};

// Full pipeline: verified-unverified retweet graph, null-model projection on
// the verified layer, Louvain labels for verified users (users outside the
// projection become singleton communities), label propagation for the rest.
DiscursiveResult discursive_communities(const std::vector<InteractionRecord>& interactions,
                                        const ProfileSet& profiles,
                                        const DiscursiveConfig& cfg = {});

} // namespace backbone
