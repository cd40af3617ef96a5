#include "doctest.h"

#include <algorithm>
#include <numeric>

#include "backbone/error.hpp"
#include "backbone/graph.hpp"
#include "backbone/rng.hpp"

using namespace backbone;

TEST_CASE("bipartite construction deduplicates and indexes in first-seen order") {
    auto g = BipartiteGraph::from_edges({{"u1", "h1"}, {"u1", "h1"}, {"u2", "h1"}});
    CHECK(g.n_rows() == 2);
    CHECK(g.n_cols() == 1);
    CHECK(g.n_links() == 2);
    CHECK(g.row_id(0) == "u1");
    CHECK(g.row_id(1) == "u2");

    auto g2 = BipartiteGraph::from_edges({{"u1", "h1"}, {"u2", "h2"}});
    auto d = g2.degree_sequences();
    CHECK(d.row_degrees == std::vector<std::int64_t>{1, 1});
    CHECK(d.col_degrees == std::vector<std::int64_t>{1, 1});
}

TEST_CASE("bipartite construction rejects bad input") {
    CHECK_THROWS_WITH_AS(BipartiteGraph::from_edges({}), "empty graph", InputError);
    CHECK_THROWS_AS(BipartiteGraph::from_edges({{"a", "b"}, {"b", "c"}}), InputError);
    CHECK_THROWS_AS(BipartiteGraph::from_edges({{"", "b"}}), InputError);
}

TEST_CASE("degree sequences") {
    auto full = BipartiteGraph::from_edges(
        {{"r1", "c1"}, {"r1", "c2"}, {"r2", "c1"}, {"r2", "c2"}});
    auto d = full.degree_sequences();
    CHECK(d.row_degrees == std::vector<std::int64_t>{2, 2});
    CHECK(d.col_degrees == std::vector<std::int64_t>{2, 2});

    auto g = BipartiteGraph::from_edges({{"u1", "h1"}, {"u1", "h2"}, {"u2", "h2"}});
    d = g.degree_sequences();
    CHECK(d.row_degrees == std::vector<std::int64_t>{2, 1});
    CHECK(d.col_degrees == std::vector<std::int64_t>{1, 2});

    auto single = BipartiteGraph::from_edges({{"a", "x"}});
    d = single.degree_sequences();
    CHECK(d.row_degrees == std::vector<std::int64_t>{1});
    CHECK(d.col_degrees == std::vector<std::int64_t>{1});
}

TEST_CASE("v-motifs count shared neighbors") {
    auto g = BipartiteGraph::from_edges(
        {{"r", "c1"}, {"r", "c2"}, {"r2", "c2"}, {"r2", "c3"}});
    CHECK(g.v_motifs(0, 1) == 1);

    auto twin = BipartiteGraph::from_edges({{"a", "c1"}, {"a", "c2"}, {"a", "c3"},
                                            {"b", "c1"}, {"b", "c2"}, {"b", "c3"}});
    CHECK(twin.v_motifs(0, 1) == 3);

    auto disjoint = BipartiteGraph::from_edges({{"a", "c1"}, {"b", "c2"}});
    CHECK(disjoint.v_motifs(0, 1) == 0);

    CHECK_THROWS_WITH_AS(g.v_motifs(0, 0), "self-similarity undefined", InputError);
}

TEST_CASE("bipartite invariants on random graphs") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<IdEdge> edges;
        const std::size_t R = 3 + rng.next_below(10), C = 3 + rng.next_below(10);
        for (std::size_t r = 0; r < R; ++r) {
            for (std::size_t c = 0; c < C; ++c) {
                if (rng.next_double() < 0.3) {
                    edges.emplace_back("r" + std::to_string(r), "c" + std::to_string(c));
                }
            }
        }
        if (edges.empty()) continue;
        auto g = BipartiteGraph::from_edges(edges);
        auto d = g.degree_sequences();
        const auto row_sum = std::accumulate(d.row_degrees.begin(), d.row_degrees.end(),
                                             std::int64_t{0});
        const auto col_sum = std::accumulate(d.col_degrees.begin(), d.col_degrees.end(),
                                             std::int64_t{0});
        CHECK(row_sum == col_sum);
        CHECK(static_cast<std::size_t>(row_sum) == g.n_links());

        for (std::size_t a = 0; a + 1 < g.n_rows(); ++a) {
            const std::size_t v = g.v_motifs(a, a + 1);
            CHECK(v == g.v_motifs(a + 1, a));
            CHECK(v <= std::min(d.row_degrees[a], d.row_degrees[a + 1]));
        }
    }
}

TEST_CASE("universe nodes without links are dropped and counted") {
    auto g = BipartiteGraph::from_edges({{"a", "x"}}, {"a", "lonely"}, {"x", "y", "z"});
    CHECK(g.n_rows() == 1);
    CHECK(g.n_cols() == 1);
    CHECK(g.dropped_rows() == 1);
    CHECK(g.dropped_cols() == 2);
}

TEST_CASE("monopartite construction collapses duplicates and directions") {
    auto g = Graph::from_edges({{"a", "b"}, {"b", "a"}, {"a", "b"}});
    CHECK(g.n_nodes() == 2);
    CHECK(g.n_edges() == 1);
    CHECK(g.dropped_self_edges() == 0);

    auto self = Graph::from_edges({{"a", "a"}});
    CHECK(self.n_edges() == 0);
    CHECK(self.dropped_self_edges() == 1);

    auto path = Graph::from_edges({{"a", "b"}, {"b", "c"}});
    CHECK(path.n_edges() == 2);
    CHECK(path.degree(*path.node_index("b")) == 2);
}

TEST_CASE("monopartite construction is idempotent under duplication and reversal") {
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<IdEdge> base;
        const std::size_t n = 4 + rng.next_below(8);
        for (std::size_t u = 0; u < n; ++u) {
            for (std::size_t v = u + 1; v < n; ++v) {
                if (rng.next_double() < 0.4) {
                    base.emplace_back("n" + std::to_string(u), "n" + std::to_string(v));
                }
            }
        }
        std::vector<IdEdge> noisy = base;
        for (const auto& [a, b] : base) {
            noisy.emplace_back(b, a);
            noisy.emplace_back(a, b);
        }
        Rng shuffle_rng(trial);
        shuffle_rng.shuffle(noisy);
        auto g1 = Graph::from_edges(base);
        auto g2 = Graph::from_edges(noisy);
        CHECK(g1.n_edges() == g2.n_edges());
        for (const auto& [u, v] : g1.edges()) {
            const auto iu = g2.node_index(g1.node_id(u)), iv = g2.node_index(g1.node_id(v));
            REQUIRE(iu.has_value());
            REQUIRE(iv.has_value());
            CHECK(g2.has_edge(*iu, *iv));
        }
    }
}

TEST_CASE("edge list round trip") {
    auto g = BipartiteGraph::from_edges({{"u1", "h1"}, {"u1", "h2"}, {"u2", "h2"}});
    const std::string path = "test_graph_roundtrip.tsv";
    g.save(path);
    auto loaded = BipartiteGraph::load(path);
    CHECK(loaded.n_rows() == g.n_rows());
    CHECK(loaded.n_cols() == g.n_cols());
    CHECK(loaded.n_links() == g.n_links());
    CHECK(loaded.fingerprint() == g.fingerprint());
    std::remove(path.c_str());
}
