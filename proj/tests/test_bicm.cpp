#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "backbone/bicm.hpp"
#include "backbone/error.hpp"
#include "backbone/graph.hpp"
#include "backbone/rng.hpp"

using namespace backbone;

namespace {

// Random bipartite graph with roughly power-law row weights; clamps away
// full rows/columns so the plain fit path is exercised.
BipartiteGraph random_graph(std::size_t R, std::size_t C, std::uint64_t seed,
                            double density = 0.15) {
    Rng rng(seed);
    std::vector<double> wr(R), wc(C);
    for (auto& w : wr) w = std::pow(rng.next_double(), -0.6);
    for (auto& w : wc) w = std::pow(rng.next_double(), -0.6);
    double sr = 0, sc = 0;
    for (double w : wr) sr += w;
    for (double w : wc) sc += w;

    std::vector<IdEdge> edges;
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t c = 0; c < C; ++c) {
            double p = density * static_cast<double>(R * C) * (wr[r] / sr) * (wc[c] / sc);
            p = std::min(p, 0.8);
            if (rng.next_double() < p) {
                edges.emplace_back("r" + std::to_string(r), "c" + std::to_string(c));
            }
        }
    }
    if (edges.empty()) edges.emplace_back("r0", "c0");
    return BipartiteGraph::from_edges(edges);
}

double max_fit_residual(const BipartiteGraph& g, const BicmModel& m) {
    const auto obs = g.degree_sequences();
    const auto exp = m.expected_degrees();
    double res = 0;
    for (std::size_t r = 0; r < g.n_rows(); ++r) {
        res = std::max(res, std::fabs(exp.rows[r] - static_cast<double>(obs.row_degrees[r])));
    }
    for (std::size_t c = 0; c < g.n_cols(); ++c) {
        res = std::max(res, std::fabs(exp.cols[c] - static_cast<double>(obs.col_degrees[c])));
    }
    return res;
}

} // namespace

TEST_CASE("perfect matching 2x2 gives p = 1/2 everywhere") {
    auto g = BipartiteGraph::from_edges({{"r1", "c1"}, {"r2", "c2"}});
    auto m = fit_bicm(g);
    for (std::size_t r = 0; r < 2; ++r) {
        for (std::size_t c = 0; c < 2; ++c) {
            CHECK(m.link_probability(r, c) == doctest::Approx(0.5).epsilon(1e-9));
        }
    }
    auto e = m.expected_degrees();
    CHECK(e.rows[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(e.cols[1] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("3x3 with all degrees 2 gives p = 2/3") {
    auto g = BipartiteGraph::from_edges({{"r1", "c1"}, {"r1", "c2"},
                                         {"r2", "c2"}, {"r2", "c3"},
                                         {"r3", "c3"}, {"r3", "c1"}});
    auto m = fit_bicm(g);
    CHECK(m.link_probability(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(m.link_probability(2, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("fit reproduces observed degrees on random graphs") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        auto g = random_graph(50, 80, seed);
        auto m = fit_bicm(g);
        CHECK(max_fit_residual(g, m) <= 1e-10);
        for (std::size_t r = 0; r < g.n_rows(); ++r) {
            for (std::size_t c = 0; c < g.n_cols(); ++c) {
                const double p = m.link_probability(r, c);
                CHECK(p > 0.0);
                CHECK(p < 1.0);
            }
        }
    }
}

TEST_CASE("quasi-newton method agrees with the fixed point") {
    auto g = random_graph(30, 40, 99);
    FitConfig qn;
    qn.method = FitMethod::quasi_newton;
    auto m1 = fit_bicm(g);
    auto m2 = fit_bicm(g, qn);
    CHECK(max_fit_residual(g, m2) <= 1e-10);
    for (std::size_t r = 0; r < g.n_rows(); ++r) {
        for (std::size_t c = 0; c < g.n_cols(); ++c) {
            CHECK(m1.link_probability(r, c) ==
                  doctest::Approx(m2.link_probability(r, c)).epsilon(1e-8));
        }
    }
    // With the scale convention the multipliers themselves line up too.
    for (std::size_t r = 0; r < g.n_rows(); ++r) {
        CHECK(m1.row_multiplier(r) == doctest::Approx(m2.row_multiplier(r)).epsilon(1e-6));
    }
}

TEST_CASE("rows with identical degree share a multiplier exactly") {
    auto g = random_graph(40, 30, 5);
    auto m = fit_bicm(g);
    const auto d = g.degree_sequences();
    for (std::size_t a = 0; a < g.n_rows(); ++a) {
        for (std::size_t b = a + 1; b < g.n_rows(); ++b) {
            if (d.row_degrees[a] == d.row_degrees[b]) {
                CHECK(m.row_multiplier(a) == m.row_multiplier(b));
            }
        }
    }
}

TEST_CASE("raising a row's degree never lowers its multiplier") {
    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        auto g = random_graph(8, 10, 100 + trial, 0.3);
        const auto d = g.degree_sequences();
        // Find a row with a missing link to extend.
        std::size_t row = g.n_rows();
        std::size_t col = 0;
        for (std::size_t r = 0; r < g.n_rows() && row == g.n_rows(); ++r) {
            if (d.row_degrees[r] + 1 >= static_cast<std::int64_t>(g.n_cols())) continue;
            for (std::size_t c = 0; c < g.n_cols(); ++c) {
                if (!g.has_link(r, c)) {
                    row = r;
                    col = c;
                    break;
                }
            }
        }
        if (row == g.n_rows()) continue;

        std::vector<IdEdge> edges;
        for (std::size_t r = 0; r < g.n_rows(); ++r) {
            for (std::uint32_t c : g.row_neighbors(r)) {
                edges.emplace_back(g.row_id(r), g.col_id(c));
            }
        }
        edges.emplace_back(g.row_id(row), g.col_id(col));
        auto g2 = BipartiteGraph::from_edges(edges);

        auto m1 = fit_bicm(g);
        auto m2 = fit_bicm(g2);
        const auto r2 = g2.row_index(g.row_id(row));
        REQUIRE(r2.has_value());
        CHECK(m2.row_multiplier(*r2) >= m1.row_multiplier(row) - 1e-9);
    }
}

TEST_CASE("saturated nodes are detached and carry probability one") {
    // Row "hub" touches every column; the rest are plain.
    auto g = BipartiteGraph::from_edges({{"hub", "c1"}, {"hub", "c2"}, {"hub", "c3"},
                                         {"a", "c1"}, {"a", "c2"}, {"b", "c2"}, {"b", "c3"}});
    auto m = fit_bicm(g);
    const auto hub = g.row_index("hub");
    REQUIRE(hub.has_value());
    CHECK(m.row_state(*hub) == BicmModel::NodeState::saturated);
    CHECK(m.report().saturated_rows == 1);
    for (std::size_t c = 0; c < g.n_cols(); ++c) {
        CHECK(m.link_probability(*hub, c) == 1.0);
    }
    CHECK(max_fit_residual(g, m) <= 1e-10);
}

TEST_CASE("star graph is reproduced exactly by saturated nodes") {
    auto g = BipartiteGraph::from_edges({{"a", "hub"}, {"b", "hub"}, {"c", "hub"}});
    auto m = fit_bicm(g);  // single column, so the rows saturate it as well
    CHECK(m.report().saturated_cols == 1);
    CHECK(m.report().saturated_rows == 3);
    CHECK(m.link_probability(0, 0) == 1.0);
    CHECK(max_fit_residual(g, m) <= 1e-12);
}

TEST_CASE("nodes linked only to saturated nodes become exact zeros") {
    // hub touches every row; a and b have no other link, so their reduced
    // degree is zero and their probability to the fit columns must vanish.
    auto g = BipartiteGraph::from_edges({{"a", "hub"}, {"b", "hub"},
                                         {"c", "hub"}, {"c", "c2"},
                                         {"d", "hub"}, {"d", "c3"}});
    auto m = fit_bicm(g);
    CHECK(m.report().saturated_cols == 1);
    CHECK(m.report().zero_rows == 2);
    const auto a = g.row_index("a"), c2 = g.col_index("c2");
    REQUIRE(a.has_value());
    REQUIRE(c2.has_value());
    CHECK(m.row_state(*a) == BicmModel::NodeState::zero);
    CHECK(m.row_multiplier(*a) == 0.0);
    CHECK(m.link_probability(*a, *g.col_index("hub")) == 1.0);
    CHECK(m.link_probability(*a, *c2) == 0.0);
    CHECK(max_fit_residual(g, m) <= 1e-10);
}

TEST_CASE("degenerate reduced system is rejected") {
    // After removing the saturated row, c3 has no remaining links and r2
    // still touches every remaining fit column.
    auto g = BipartiteGraph::from_edges({{"r1", "c1"}, {"r1", "c2"}, {"r1", "c3"},
                                         {"r2", "c1"}, {"r2", "c2"},
                                         {"r3", "c1"}, {"r4", "c2"}});
    CHECK_THROWS_AS(fit_bicm(g), InputError);
}

TEST_CASE("non-convergence carries the residual") {
    auto g = random_graph(30, 40, 123);
    FitConfig cfg;
    cfg.max_iterations = 1;
    cfg.tolerance = 1e-14;
    CHECK_THROWS_WITH_AS(fit_bicm(g, cfg),
                         doctest::Contains("did not converge"), std::runtime_error);
}

TEST_CASE("sampling matches link probabilities and is seed-deterministic") {
    auto g = BipartiteGraph::from_edges({{"r1", "c1"}, {"r2", "c2"}});
    auto m = fit_bicm(g);  // all p = 1/2

    // Mean link count over many samples: Binomial(4, 1/2) per sample.
    const int n_samples = 100000;
    std::int64_t links = 0;
    for (int s = 0; s < n_samples; ++s) {
        links += static_cast<std::int64_t>(
            m.sample_edges(derive_seed(42, static_cast<std::uint64_t>(s))).size());
    }
    const double mean = static_cast<double>(links) / n_samples;
    const double sigma = std::sqrt(4 * 0.25 / n_samples);
    CHECK(std::fabs(mean - 2.0) <= 3 * sigma);

    auto s1 = m.sample(9);
    auto s2 = m.sample(9);
    CHECK(s1.fingerprint() == s2.fingerprint());
}

TEST_CASE("empirical link frequency converges to p under sampling") {
    auto g = random_graph(6, 8, 33, 0.4);
    auto m = fit_bicm(g);
    const int n_samples = 8000;
    std::vector<int> hits(g.n_rows() * g.n_cols(), 0);
    for (int s = 0; s < n_samples; ++s) {
        auto sample = m.sample(derive_seed(1000, static_cast<std::uint64_t>(s)));
        for (std::size_t r = 0; r < sample.n_rows(); ++r) {
            const auto orig_r = g.row_index(sample.row_id(r));
            for (std::uint32_t c : sample.row_neighbors(r)) {
                const auto orig_c = g.col_index(sample.col_id(c));
                ++hits[*orig_r * g.n_cols() + *orig_c];
            }
        }
    }
    for (std::size_t r = 0; r < g.n_rows(); ++r) {
        for (std::size_t c = 0; c < g.n_cols(); ++c) {
            const double p = m.link_probability(r, c);
            const double freq = static_cast<double>(hits[r * g.n_cols() + c]) / n_samples;
            const double sigma = std::sqrt(p * (1 - p) / n_samples);
            // 48 cells are inspected at once; 4 sigma keeps the joint test sharp.
            CHECK(std::fabs(freq - p) <= std::max(4 * sigma, 1e-3));
        }
    }
}

TEST_CASE("a near-complete graph samples near-complete") {
    // 3x3 minus one link: every probability is pinned at 0 or 1 by the
    // saturated-node handling, so each draw reproduces the graph.
    std::vector<IdEdge> edges;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            if (r == 2 && c == 2) continue;
            edges.emplace_back("r" + std::to_string(r), "c" + std::to_string(c));
        }
    }
    auto g = BipartiteGraph::from_edges(edges);
    auto m = fit_bicm(g);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        CHECK(m.sample_edges(seed).size() == 8);
    }
}

TEST_CASE("model persistence round-trips bit-faithfully") {
    auto g = random_graph(25, 35, 77);
    auto m = fit_bicm(g);
    const std::string path = "test_bicm_model.json";
    m.save(path);
    auto loaded = BicmModel::load(path);
    REQUIRE(loaded.n_rows() == m.n_rows());
    REQUIRE(loaded.n_cols() == m.n_cols());
    CHECK(loaded.graph_fingerprint() == m.graph_fingerprint());
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
        const double a = m.row_multiplier(r), b = loaded.row_multiplier(r);
        CHECK(std::memcmp(&a, &b, sizeof(double)) == 0);
    }
    for (std::size_t c = 0; c < m.n_cols(); ++c) {
        const double a = m.col_multiplier(c), b = loaded.col_multiplier(c);
        CHECK(std::memcmp(&a, &b, sizeof(double)) == 0);
    }
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
        for (std::size_t c = 0; c < m.n_cols(); ++c) {
            CHECK(loaded.link_probability(r, c) == m.link_probability(r, c));
        }
    }
    std::remove(path.c_str());
}
