#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "backbone/graph.hpp"

namespace backbone {

enum class FitMethod { fixed_point, quasi_newton };

struct FitConfig {
    double tolerance = 1e-10;    // max absolute degree residual
    int max_iterations = 10000;  // full sweeps over both layers
    FitMethod method = FitMethod::fixed_point;
    double damping = 0.5;        // step mixing for the fixed-point update
};

struct FitReport {
    int iterations = 0;
    double max_residual = 0.0;
    bool converged = false;
    std::size_t saturated_rows = 0, saturated_cols = 0;
    std::size_t zero_rows = 0, zero_cols = 0;  // nodes whose links all go to saturated nodes
};

// Real-valued expected degrees of a fitted model.
struct ExpectedDegrees {
    std::vector<double> rows;
    std::vector<double> cols;
};

// Maximum-entropy bipartite null model constrained on both degree sequences.
// Link (r,c) is an independent Bernoulli with p_rc = x_r y_c / (1 + x_r y_c).
// Nodes connected to the whole opposite layer cannot carry a finite
// multiplier; they are detached before solving and their links carry p = 1
// exactly. Nodes whose links all go to such saturated nodes carry p = 0
// towards everything else.
class BicmModel {
public:
    enum class NodeState : std::uint8_t { fitted, saturated, zero };

    double link_probability(std::size_t r, std::size_t c) const {
        return prob_table_[row_class_[r] * n_col_classes() + col_class_[c]];
    }

    ExpectedDegrees expected_degrees() const;

    // Multiplier of a fitted node; +inf for saturated, 0 for zero nodes.
    double row_multiplier(std::size_t r) const;
    double col_multiplier(std::size_t c) const;
    NodeState row_state(std::size_t r) const { return row_states_[r]; }
    NodeState col_state(std::size_t c) const { return col_states_[c]; }

    std::size_t n_rows() const { return row_ids_.size(); }
    std::size_t n_cols() const { return col_ids_.size(); }
    const std::vector<NodeId>& row_ids() const { return row_ids_; }
    const std::vector<NodeId>& col_ids() const { return col_ids_; }

    const DegreeSequences& observed_degrees() const { return observed_; }
    const FitReport& report() const { return report_; }
    std::uint64_t graph_fingerprint() const { return graph_fingerprint_; }

    // Null mean and Le Cam bound for the common-neighbor count of a pair of
    // same-layer nodes: mu = sum over opposite nodes of p_a p_b, and
    // bound = 2 * sum of (p_a p_b)^2. O(number of opposite degree classes).
    struct PairNull {
        double mu;
        double lecam_bound;
    };
    PairNull row_pair_null(std::size_t r, std::size_t r2) const;
    PairNull col_pair_null(std::size_t c, std::size_t c2) const;

    // Per-opposite-node link probability products for a same-layer pair, in
    // opposite-index order. Feeds the exact Poisson-Binomial tail.
    std::vector<double> row_pair_products(std::size_t r, std::size_t r2) const;
    std::vector<double> col_pair_products(std::size_t c, std::size_t c2) const;

    // One graph drawn from the model; links independent, deterministic per
    // seed. Node ids are preserved; nodes that draw no link are dropped by
    // construction and counted on the returned graph. sample() throws when
    // the draw is empty; sample_edges() exposes the raw draw.
    BipartiteGraph sample(std::uint64_t seed) const;
    std::vector<IdEdge> sample_edges(std::uint64_t seed) const;

    // JSON persistence; round-trip is bit-faithful for all multipliers.
    void save(const std::string& path) const;
    static BicmModel load(const std::string& path);

    // Degree-class layout, exposed for pair statistics over many pairs.
    std::size_t n_row_classes() const { return row_class_sizes_.size(); }
    std::size_t n_col_classes() const { return col_class_sizes_.size(); }
    std::size_t row_class(std::size_t r) const { return row_class_[r]; }
    std::size_t col_class(std::size_t c) const { return col_class_[c]; }
    const std::vector<std::size_t>& row_class_sizes() const { return row_class_sizes_; }
    const std::vector<std::size_t>& col_class_sizes() const { return col_class_sizes_; }
    double class_probability(std::size_t rc, std::size_t cc) const {
        return prob_table_[rc * n_col_classes() + cc];
    }

private:
    friend BicmModel fit_bicm(const BipartiteGraph&, const FitConfig&);

    void build_prob_table();

    std::vector<NodeId> row_ids_, col_ids_;
    DegreeSequences observed_;
    std::vector<NodeState> row_states_, col_states_;
    std::vector<double> row_x_, col_y_;  // per node; 0 for non-fitted nodes

    // Nodes grouped by (state, degree). Classes 0 and 1 are reserved for the
    // saturated and zero pseudo-classes even when empty.
    std::vector<std::size_t> row_class_, col_class_;
    std::vector<std::size_t> row_class_sizes_, col_class_sizes_;
    std::vector<double> prob_table_;  // n_row_classes x n_col_classes

    FitReport report_;
    std::uint64_t graph_fingerprint_ = 0;
};

// Fits the model so expected degrees reproduce the observed ones within
// cfg.tolerance. Throws InputError("degenerate degree") when a node is still
// forced to full connectivity after the saturated-node reduction, and
// std::runtime_error carrying the residual on non-convergence.
BicmModel fit_bicm(const BipartiteGraph& g, const FitConfig& cfg = {});

} // namespace backbone
