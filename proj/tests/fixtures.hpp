#ifndef CBANDIT_TESTS_FIXTURES_HPP
#define CBANDIT_TESTS_FIXTURES_HPP

#include <vector>

#include "graph.hpp"
#include "rng.hpp"
#include "scm.hpp"

namespace fixtures {

using cbandit::Admg;
using cbandit::Scm;
using cbandit::ScmSpec;
using cbandit::VarId;
using cbandit::VertexSet;

// The running 4-node example: V1 -> Y, V2 -> Y, V3 -> V1 plus bidirected
// V1--V2, V1--V3, V2--Y, V3--Y. Ids: V1=0, V2=1, V3=2, Y=3.
inline Admg figure1_g() {
    Admg g({"V1", "V2", "V3", "Y"}, 3);
    g.add_edge(0, 3);
    g.add_edge(1, 3);
    g.add_edge(2, 0);
    g.add_bidirected(0, 1);
    g.add_bidirected(0, 2);
    g.add_bidirected(1, 3);
    g.add_bidirected(2, 3);
    return g;
}

// Variants with one bidirected edge removed.
inline Admg figure1_g1() { // drop V2--Y
    Admg g = figure1_g();
    g.remove_bidirected(1, 3);
    return g;
}
inline Admg figure1_g2() { // drop V1--V2
    Admg g = figure1_g();
    g.remove_bidirected(0, 1);
    return g;
}
inline Admg figure1_g3() { // drop V1--V3
    Admg g = figure1_g();
    g.remove_bidirected(0, 2);
    return g;
}

// X1 -> X2 -> Y with X2--Y. Ids: X1=0, X2=1, Y=2.
inline Admg xor_graph() {
    Admg g({"X1", "X2", "Y"}, 2);
    g.add_edge(0, 1);
    g.add_edge(1, 2);
    g.add_bidirected(1, 2);
    return g;
}

// Random DAG + random bidirected edges over n vertices, reward last.
// Edge probability p_dir respecting a fixed topological order; each unordered
// pair gets a bidirected edge with probability p_bi.
inline Admg random_admg(int n, double p_dir, double p_bi, cbandit::Rng& rng) {
    Admg g = Admg::with_reward_last(n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (rng.bernoulli(p_dir)) g.add_edge(i, j);
        }
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (rng.bernoulli(p_bi)) g.add_bidirected(i, j);
        }
    }
    return g;
}

inline VertexSet vs(std::initializer_list<VarId> ids) { return VertexSet(ids); }

// X1 = U1, X2 = X1 xor U2, Y = X2 xor U2, so Y = X1 identically. The shared
// exogenous U2 is the X2--Y confounder. P(X1=1) = a, P(U2=1) = b.
inline ScmSpec xor_scm_spec(double a, double b) {
    ScmSpec spec{xor_graph(), {}, {}, {}, {}};
    spec.domain = {2, 2, 2};
    spec.noise = {{1.0 - a, a}, {1.0}, {1.0}};
    spec.confounders = {{1, 2, {1.0 - b, b}}};
    spec.mech.resize(3);
    spec.mech[0].table = {0, 1};          // X1 = U1
    spec.mech[1].table = {0, 1, 1, 0};    // X2 = X1 xor U2   (index = 2*x1 + u2)
    spec.mech[2].table = {0, 1, 1, 0};    // Y  = X2 xor U2
    return spec;
}

// Uniform exogenous variables: the textbook instance with
// E[Y|do(X1=1)] = 1 and E[Y|do(X2=.)] = 0.5.
inline Scm xor_scm_paper() { return Scm(xor_scm_spec(0.5, 0.5)); }

// Skewed exogenous variables so that every ancestrality/latent gap the
// discovery tests probe is bounded away from zero.
inline Scm xor_scm_gapped() { return Scm(xor_scm_spec(0.7, 0.25)); }

// Random valid SCM over g with no gap enforcement; binary exogenous variables,
// uniform random mechanism tables. For property tests that only need a valid
// instance.
inline Scm random_scm_any(const Admg& g, int k, cbandit::Rng& rng) {
    ScmSpec spec{g, {}, {}, {}, {}};
    const int n = g.size();
    spec.domain.assign(n, k);
    spec.domain[g.reward()] = 2;
    for (int v = 0; v < n; ++v) {
        double p = 0.2 + 0.6 * rng.uniform();
        spec.noise.push_back({1.0 - p, p});
    }
    for (auto [a, b] : g.bidirected_edges()) {
        double p = 0.2 + 0.6 * rng.uniform();
        spec.confounders.push_back({a, b, {1.0 - p, p}});
    }
    for (int v = 0; v < n; ++v) {
        size_t rows = 2;
        for (VarId p : g.parents_mask(v).to_vector()) rows *= spec.domain[p];
        for (auto [a, b] : g.bidirected_edges()) {
            if (a == v || b == v) rows *= 2;
        }
        cbandit::MechanismSpec m;
        m.table.resize(rows);
        for (auto& cell : m.table) cell = static_cast<int>(rng.uniform_below(spec.domain[v]));
        spec.mech.push_back(std::move(m));
    }
    return Scm(std::move(spec));
}

} // namespace fixtures

#endif
