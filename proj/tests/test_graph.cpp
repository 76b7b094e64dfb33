#include <doctest.h>

#include <set>
#include <vector>

#include "fixtures.hpp"
#include "graph.hpp"
#include "rng.hpp"

using namespace cbandit;
using fixtures::vs;

namespace {

// Independent reachability oracle: Floyd-Warshall style closure on a dense
// boolean matrix, no shared code with the library's mask BFS.
std::vector<std::vector<bool>> reach_oracle(const Admg& g) {
    const int n = g.size();
    std::vector<std::vector<bool>> r(n, std::vector<bool>(n, false));
    for (auto [t, h] : g.directed_edges()) r[t][h] = true;
    for (int k = 0; k < n; ++k) {
        for (int i = 0; i < n; ++i) {
            if (!r[i][k]) continue;
            for (int j = 0; j < n; ++j) {
                if (r[k][j]) r[i][j] = true;
            }
        }
    }
    return r;
}

bool is_uc_territory(const Admg& g, VarId y, VertexSet t) {
    const VertexSet h = ancestors(g, y) | vs({y});
    if (!t.contains(y) || !t.subset_of(h)) return false;
    // Closed under descendants within the induced subgraph on h.
    for (VarId v : t.to_vector()) {
        for (VarId d : (descendants(g, v) & h).to_vector()) {
            // descendant path must stay within h; since h is ancestrally closed
            // plus y, any directed path between members of h stays in h
            if (!t.contains(d)) return false;
        }
        for (VarId s : (g.siblings_mask(v) & h).to_vector()) {
            if (!t.contains(s)) return false;
        }
    }
    return true;
}

} // namespace

TEST_CASE("relation queries on a chain") {
    Admg g({"A", "B", "C"}, 2);
    g.add_edge(0, 1);
    g.add_edge(1, 2);
    CHECK(ancestors(g, 2) == vs({0, 1}));
    CHECK(descendants(g, 0) == vs({1, 2}));
    CHECK(relation_query(g, 1, Relation::parents) == vs({0}));
    CHECK(relation_query(g, 1, Relation::children) == vs({2}));
    CHECK_FALSE(ancestors(g, 0).contains(0)); // strict ancestry
    CHECK_THROWS_AS(relation_query(g, 7, Relation::parents), DomainError);
}

TEST_CASE("relation queries on the figure-1 graph") {
    Admg g = fixtures::figure1_g();
    CHECK(g.parents_mask(3) == vs({0, 1}));
    CHECK(ancestors(g, 3) == vs({0, 1, 2}));
}

TEST_CASE("transitive closure") {
    Admg chain({"A", "B", "C"}, 2);
    chain.add_edge(0, 1);
    chain.add_edge(1, 2);
    Admg tc = transitive_closure(chain);
    CHECK(tc.has_edge(0, 1));
    CHECK(tc.has_edge(1, 2));
    CHECK(tc.has_edge(0, 2));
    CHECK(tc.directed_edges().size() == 3);

    SUBCASE("idempotent") { CHECK(transitive_closure(tc) == tc); }

    SUBCASE("figure-1 gains V3 -> Y") {
        Admg g = fixtures::figure1_g();
        Admg gc = transitive_closure(g);
        CHECK(gc.has_edge(2, 3));
        CHECK(gc.directed_edges().size() == 4);
        CHECK(gc.bidirected_edges() == g.bidirected_edges());
    }
}

TEST_CASE("transitive reduction") {
    Admg g({"A", "B", "C"}, 2);
    g.add_edge(0, 1);
    g.add_edge(1, 2);
    g.add_edge(0, 2);
    Admg tr = transitive_reduction(g);
    CHECK(tr.has_edge(0, 1));
    CHECK(tr.has_edge(1, 2));
    CHECK_FALSE(tr.has_edge(0, 2));

    SUBCASE("edgeless graph maps to itself") {
        Admg e({"A", "B"}, 1);
        CHECK(transitive_reduction(e) == e);
    }
}

TEST_CASE("closure/reduction duality on random dags") {
    Rng rng(20240601);
    for (int trial = 0; trial < 100; ++trial) {
        int n = 2 + static_cast<int>(rng.uniform_below(7));
        Admg g = fixtures::random_admg(n, 0.4, 0.2, rng);

        // Library closure against the independent matrix oracle.
        Admg tc = transitive_closure(g);
        auto r = reach_oracle(g);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                CHECK(tc.has_edge(i, j) == r[i][j]);
            }
        }

        Admg tr = transitive_reduction(g);
        CHECK(transitive_closure(tr) == tc);
        CHECK(transitive_reduction(tc) == tr); // Tr(G) = Tr(G^tc)
        CHECK(transitive_closure(transitive_closure(g)) == tc);
    }
}

TEST_CASE("do_graph") {
    Admg g = fixtures::figure1_g();

    SUBCASE("empty intervention is identity") { CHECK(do_graph(g, VertexSet()) == g); }

    SUBCASE("do(V1) strips its incoming edges and confounders") {
        Admg cut = do_graph(g, vs({0}));
        CHECK_FALSE(cut.has_edge(2, 0));      // V3 -> V1 gone
        CHECK_FALSE(cut.has_bidirected(0, 1));
        CHECK_FALSE(cut.has_bidirected(0, 2));
        CHECK(cut.has_edge(0, 3));            // V1 -> Y kept
        CHECK(cut.has_edge(1, 3));
        CHECK(cut.has_bidirected(1, 3));
        CHECK(cut.has_bidirected(2, 3));
    }

    SUBCASE("do on everything but Y keeps only Pa(Y) edges") {
        Admg cut = do_graph(g, vs({0, 1, 2}));
        CHECK(cut.directed_edges() == std::vector<std::pair<VarId, VarId>>{{0, 3}, {1, 3}});
        CHECK(cut.bidirected_edges().empty()); // every confounder touches W
    }

    SUBCASE("idempotent in w") {
        Rng rng(7);
        for (int trial = 0; trial < 50; ++trial) {
            Admg h = fixtures::random_admg(5, 0.4, 0.3, rng);
            VertexSet w(rng.uniform_below(16));
            Admg once = do_graph(h, w);
            CHECK(do_graph(once, w) == once);
        }
    }
}

TEST_CASE("c-components") {
    Admg g({"X", "Y", "Z"}, 1);
    g.add_bidirected(0, 1);
    g.add_bidirected(1, 2);
    CHECK(c_component(g, 0) == vs({0, 1, 2}));

    Admg iso({"A", "B"}, 1);
    CHECK(c_component(iso, 0) == vs({0}));

    CHECK(c_component(fixtures::figure1_g(), 3) == vs({0, 1, 2, 3}));
}

TEST_CASE("muct") {
    Admg g = fixtures::figure1_g();
    CHECK(muct(g, 3) == vs({0, 1, 2, 3}));

    SUBCASE("no confounders means the territory is just the reward") {
        Admg plain({"A", "B", "Y"}, 2);
        plain.add_edge(0, 2);
        plain.add_edge(1, 2);
        CHECK(muct(plain, 2) == vs({2}));
    }

    SUBCASE("post-intervention territory shrinks") {
        CHECK(muct(do_graph(g, vs({0})), 3) == vs({1, 3})); // {Y, V2}
    }
}

TEST_CASE("muct is the minimal uc-territory (exhaustive)") {
    Rng rng(99);
    for (int trial = 0; trial < 60; ++trial) {
        int n = 2 + static_cast<int>(rng.uniform_below(7)); // up to 8 vertices
        Admg g = fixtures::random_admg(n, 0.35, 0.3, rng);
        VarId y = g.reward();
        VertexSet t = muct(g, y);
        CHECK(is_uc_territory(g, y, t));
        // No strict subset containing y is a UC-territory.
        auto members = t.to_vector();
        int k = static_cast<int>(members.size());
        for (uint64_t sub = 0; sub + 1 < (1ULL << k); ++sub) {
            VertexSet cand;
            for (int i = 0; i < k; ++i) {
                if ((sub >> i) & 1ULL) cand.insert(members[i]);
            }
            if (!cand.contains(y)) continue;
            CHECK_FALSE(is_uc_territory(g, y, cand));
        }
    }
}

TEST_CASE("interventional border") {
    Admg g = fixtures::figure1_g();
    CHECK(interventional_border(g, 3).empty());
    CHECK(interventional_border(do_graph(g, vs({0})), 3) == vs({0}));

    Admg plain({"A", "B", "Y"}, 2);
    plain.add_edge(0, 2);
    plain.add_edge(1, 2);
    CHECK(interventional_border(plain, 2) == plain.parents_mask(2));
}

TEST_CASE("pomis families of the figure-1 graphs") {
    PomisFamily fg = enumerate_pomis(fixtures::figure1_g());
    PomisFamily expected_g;
    expected_g.insert(VertexSet());
    expected_g.insert(vs({0}));
    expected_g.insert(vs({1}));
    expected_g.insert(vs({2}));
    expected_g.insert(vs({0, 1}));
    CHECK(fg == expected_g);

    PomisFamily fg1 = enumerate_pomis(fixtures::figure1_g1());
    PomisFamily expected_g1;
    expected_g1.insert(VertexSet());
    expected_g1.insert(vs({1}));
    expected_g1.insert(vs({0, 1}));
    CHECK(fg1 == expected_g1);

    PomisFamily fg2 = enumerate_pomis(fixtures::figure1_g2());
    PomisFamily expected_g2;
    expected_g2.insert(VertexSet());
    expected_g2.insert(vs({0}));
    expected_g2.insert(vs({1}));
    expected_g2.insert(vs({0, 1}));
    CHECK(fg2 == expected_g2);

    CHECK(enumerate_pomis(fixtures::figure1_g3()) == expected_g);
}

TEST_CASE("every pomis is a set of reward ancestors") {
    Rng rng(512);
    for (int trial = 0; trial < 40; ++trial) {
        int n = 2 + static_cast<int>(rng.uniform_below(6));
        Admg g = fixtures::random_admg(n, 0.4, 0.3, rng);
        VertexSet an = ancestors(g, g.reward());
        for (VertexSet member : enumerate_pomis(g)) {
            CHECK(member.subset_of(an));
            CHECK_FALSE(member.contains(g.reward()));
        }
    }
}

TEST_CASE("pomis enumeration guard") {
    Admg big = Admg::with_reward_last(24);
    CHECK_THROWS_AS(enumerate_pomis(big), CapacityError);
    CHECK_NOTHROW(enumerate_pomis(big, 24)); // caller override
}

TEST_CASE("graph construction rejects bad input") {
    Admg g({"A", "B"}, 1);
    CHECK_THROWS_AS(g.add_edge(0, 0), DomainError);
    g.add_edge(0, 1);
    CHECK_THROWS_AS(g.add_edge(1, 0), DomainError); // cycle
    CHECK_THROWS_AS(g.add_bidirected(1, 1), DomainError);
    CHECK_THROWS_AS(Admg({"A", "A"}, 0), DomainError);
    CHECK_THROWS_AS(Admg({"A"}, 3), DomainError);
}
