#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "backbone/bicm.hpp"
#include "backbone/graph.hpp"

namespace backbone {

enum class Layer { rows, columns };

// Upper tail P(Poisson(mu) >= observed); 1 when observed <= 0.
double poisson_upper_tail(std::int64_t observed, double mu);

// Exact upper tail P(PB >= observed) of a Poisson-Binomial distribution by
// dynamic-programming convolution of the success probabilities. Serves as
// the oracle for the Poisson approximation.
double exact_pb_upper_tail(const std::vector<double>& probs, std::int64_t observed);

// Null-model comparison of one same-layer pair.
struct PairSimilarity {
    std::size_t a = 0, b = 0;     // layer indices, a < b
    std::int64_t observed = 0;    // common opposite-layer neighbors
    double poisson_mean = 0.0;
    double p_value = 1.0;
    double lecam_bound = 0.0;
    bool exact = false;           // exact PB tail used instead of the Poisson one
};

PairSimilarity pair_pvalue(const BicmModel& m, const BipartiteGraph& g,
                           std::size_t r, std::size_t r2, Layer layer = Layer::rows);

// Benjamini-Hochberg selection: sort p-values ascending and find the largest
// rank i with p_(i) <= i * t / n_hypotheses; hypotheses of rank <= i are
// rejected. Returns the cutoff rank (0 if none) and the rejected original
// indices.
struct FdrSelection {
    std::size_t cutoff_rank = 0;
    std::size_t n_hypotheses = 0;
    std::vector<std::size_t> rejected;  // indices into the input vector
};

FdrSelection fdr_select(const std::vector<double>& p_values, double t);
// Same, with the hypothesis count overridden (untested hypotheses carry
// p-value 1 and can never be rejected, so they need not be materialized).
FdrSelection fdr_select(const std::vector<double>& p_values, double t,
                        std::size_t n_hypotheses);

struct ProjectionConfig {
    double t = 0.05;           // single-test significance level
    int n_threads = 1;         // pair p-values are evaluated in index order regardless
    double lecam_exact_gate = 1e-4;
    std::size_t exact_max_opposite = 4096;
};

// One-mode projection keeping only node pairs whose common-neighbor count is
// significant under the model, FDR-corrected over all layer pairs.
struct ValidatedProjection {
    Layer layer = Layer::rows;
    Graph graph;                        // nodes with >= 1 retained edge only
    std::vector<double> edge_p_values;  // parallel to graph.edges()
    double t = 0.05;
    std::size_t cutoff_rank = 0;
    std::size_t n_hypotheses = 0;       // all unordered layer pairs
    std::size_t n_cooccurring = 0;      // pairs with observed similarity >= 1
    std::uint64_t source_fingerprint = 0;

    void save(const std::string& path) const;  // id1 <TAB> id2 <TAB> p_value
};

ValidatedProjection validated_projection(const BipartiteGraph& g, const BicmModel& m,
                                         Layer layer, const ProjectionConfig& cfg = {});

// Both one-mode projections re-joined by the original bipartite links whose
// endpoints both survived.
Graph backbone_graph(const BipartiteGraph& g, const ValidatedProjection& proj_rows,
                     const ValidatedProjection& proj_cols);

} // namespace backbone
