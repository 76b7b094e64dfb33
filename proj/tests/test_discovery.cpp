#include <doctest.h>

#include <cmath>
#include <optional>
#include <set>

#include "discovery.hpp"
#include "fixtures.hpp"
#include "graph.hpp"

using namespace cbandit;
using doctest::Approx;

namespace {

const VarId kX1 = 0, kX2 = 1, kY = 2;

DiscoveryConfig xor_cfg() {
    DiscoveryConfig cfg;
    cfg.epsilon = 0.3;
    cfg.gamma = 0.3;
    cfg.eta = 0.2;
    cfg.delta = 0.2;
    cfg.d_max = 1;
    cfg.k = 2;
    cfg.n = 3;
    return cfg;
}

Dataset make_dataset(const Scm& scm, const Intervention& iv, long long count, Rng& rng) {
    Dataset ds;
    ds.iv = iv;
    ds.key = iv.key(scm.graph());
    ds.stride = scm.var_count();
    scm.draw_into(iv, count, rng, ds.rows);
    return ds;
}

Intervention iv1(VarId v, int val) {
    Intervention iv;
    iv.set(v, val);
    return iv;
}

} // namespace

TEST_CASE("budget formulas reproduce the hand-derived values") {
    DiscoveryConfig cfg;
    cfg.epsilon = 0.5;
    cfg.gamma = 0.5;
    cfg.eta = 0.5;
    cfg.delta = 0.2;
    cfg.k = 2;
    cfg.n = 2;
    CHECK(budget_a(cfg, 0.1) == 163); // ceil(32 ln 160)
    CHECK(budget_b(cfg, 0.1) == 163);
    CHECK(budget_c(cfg, 0.1, 0.1) == 750); // ceil(128 ln 320 + 2 ln 320)
    CHECK(budget_rounds(2.0, 2, 4) == 45); // ceil(32 ln 4)
}

TEST_CASE("budget mode splits") {
    DiscoveryConfig cfg = xor_cfg();
    cfg.n = 6;

    SampleBudget closure = compute_budgets(cfg, BudgetMode::closure_only);
    CHECK(closure.delta1 == Approx(cfg.delta / 12));
    CHECK(closure.delta2 == Approx(cfg.delta / 2));
    CHECK(closure.rounds == 1);

    SampleBudget full = compute_budgets(cfg, BudgetMode::full_graph);
    double ln_n = std::log(6.0);
    double alpha = 2.0 * cfg.d_max * std::log(4.0 / cfg.delta + 2.0) / ln_n;
    CHECK(full.alpha == Approx(alpha));
    CHECK(full.delta1 == Approx(cfg.delta / (64 * alpha * cfg.d_max * 6 * ln_n)));
    CHECK(full.delta2 == Approx(cfg.delta / (64 * alpha * cfg.d_max * ln_n)));
    CHECK(full.delta2 == full.delta3);
    CHECK(full.delta3 == full.delta4);
    CHECK(full.rounds == budget_rounds(alpha, cfg.d_max, 6));

    SampleBudget obs = compute_budgets(cfg, BudgetMode::observable);
    CHECK(obs.alpha == Approx(2.0 * cfg.d_max * std::log(2.0 / cfg.delta + 2.0) / ln_n));

    SUBCASE("bad configs are rejected") {
        DiscoveryConfig bad = cfg;
        bad.epsilon = 0;
        CHECK_THROWS_AS(compute_budgets(bad, BudgetMode::full_graph), ConfigError);
        bad = cfg;
        bad.d_max = 0;
        CHECK_THROWS_AS(compute_budgets(bad, BudgetMode::full_graph), ConfigError);
    }
}

TEST_CASE("estimators") {
    Scm scm = fixtures::xor_scm_paper();
    Rng rng(5);

    SUBCASE("constant column estimates to one") {
        Dataset ds = make_dataset(scm, iv1(kX1, 1), 300, rng);
        CHECK(estimate(ds, kY, 1).p == Approx(1.0)); // Y = X1 under do(X1=1)
        CHECK(estimate(ds, kY, 1).support == 300);
    }

    SUBCASE("conditional with empty support is (0, 0)") {
        Dataset ds = make_dataset(scm, iv1(kX2, 1), 200, rng);
        Estimate e = estimate(ds, kY, 1, kX2, 0); // X2=0 never occurs
        CHECK(e.p == 0.0);
        CHECK(e.support == 0);
    }

    SUBCASE("large-sample estimate is near the exact value") {
        Dataset ds = make_dataset(scm, iv1(kX1, 1), 10000, rng);
        CHECK(estimate(ds, kY, 1).p >= 0.99);
    }
}

TEST_CASE("ancestrality test") {
    Scm scm = fixtures::xor_scm_gapped();
    Rng rng(17);
    const long long big = 20000;

    SUBCASE("X1 shifts Y under do()") {
        Dataset base = make_dataset(scm, Intervention{}, big, rng);
        Dataset d0 = make_dataset(scm, iv1(kX1, 0), big, rng);
        Dataset d1 = make_dataset(scm, iv1(kX1, 1), big, rng);
        const Dataset* per_value[] = {&d0, &d1};
        CHECK(ancestrality_test(base, per_value, kY, 2, 0.3));
    }

    SUBCASE("identical datasets never fire") {
        Dataset base = make_dataset(scm, Intervention{}, 500, rng);
        const Dataset* per_value[] = {&base, &base};
        CHECK_FALSE(ancestrality_test(base, per_value, kY, 2, 0.3));
    }

    SUBCASE("the reward shifts nothing: two observational draws agree") {
        // P(x1 | do(y)) = P(x1) since Y has no descendants; the interventional
        // datasets are therefore distributed like fresh observational draws.
        Dataset base = make_dataset(scm, Intervention{}, big, rng);
        Dataset a = make_dataset(scm, Intervention{}, big, rng);
        Dataset b = make_dataset(scm, Intervention{}, big, rng);
        const Dataset* per_value[] = {&a, &b};
        CHECK_FALSE(ancestrality_test(base, per_value, kX1, 2, 0.3));
    }
}

TEST_CASE("latent test") {
    Scm scm = fixtures::xor_scm_gapped();
    Rng rng(23);
    const long long big = 20000;

    SUBCASE("confounded pair under the parent cover") {
        // pair (X2, Y), W = {X1}
        Dataset base = make_dataset(scm, iv1(kX1, 0), big, rng);
        Dataset d0 = make_dataset(scm, iv1(kX1, 0).with(kX2, 0), big, rng);
        Dataset d1 = make_dataset(scm, iv1(kX1, 0).with(kX2, 1), big, rng);
        const Dataset* per_value[] = {&d0, &d1};
        CHECK(latent_test(per_value, base, kX2, 2, kY, 2, 0.3));
    }

    SUBCASE("clean pair stays clean") {
        // pair (X1, X2), W = {} covers the parents
        Dataset base = make_dataset(scm, Intervention{}, big, rng);
        Dataset d0 = make_dataset(scm, iv1(kX1, 0), big, rng);
        Dataset d1 = make_dataset(scm, iv1(kX1, 1), big, rng);
        const Dataset* per_value[] = {&d0, &d1};
        CHECK_FALSE(latent_test(per_value, base, kX1, 2, kX2, 2, 0.3));
    }

    SUBCASE("identical laws never fire") {
        Dataset base = make_dataset(scm, Intervention{}, 400, rng);
        const Dataset* per_value[] = {&base, &base};
        CHECK_FALSE(latent_test(per_value, base, kX1, 2, kY, 2, 0.3));
    }
}

TEST_CASE("learn_transitive_closure on the xor instance") {
    Scm scm = fixtures::xor_scm_gapped();
    DiscoveryConfig cfg = xor_cfg();
    Environment env(scm, 2027);
    InterventionalStore store(scm.graph());
    SampleBudget b = compute_budgets(cfg, BudgetMode::closure_only);
    PullAudit audit;

    Digraph closure = learn_transitive_closure(env, scm.graph().vertices(), VertexSet(), b.delta1,
                                               b.delta2, cfg, store, {}, "test", &audit);
    CHECK(closure.has_edge(kX1, kX2));
    CHECK(closure.has_edge(kX1, kY));
    CHECK(closure.has_edge(kX2, kY));
    CHECK(closure.edges().size() == 3);

    SUBCASE("sample count is exactly K*A per intervenable variable plus B") {
        long long expected = 2 * budget_a(cfg, b.delta1) * 2 + budget_b(cfg, b.delta2);
        CHECK(env.total_pulls() == expected);
        CHECK(audit.predicted == expected);
        CHECK(store.total_samples() == env.total_pulls());
    }

    SUBCASE("a one-vertex scope learns nothing and draws only the base") {
        Environment env2(scm, 1);
        InterventionalStore store2(scm.graph());
        Digraph c2 = learn_transitive_closure(env2, VertexSet({kY}), VertexSet(), b.delta1, b.delta2,
                                              cfg, store2);
        CHECK(c2.edges().empty());
        CHECK(env2.total_pulls() == budget_b(cfg, b.delta2));
    }

    SUBCASE("the reward cannot be an intervention target") {
        Environment env3(scm, 2);
        InterventionalStore store3(scm.graph());
        CHECK_THROWS_AS(learn_transitive_closure(env3, scm.graph().vertices(), VertexSet({kY}),
                                                 b.delta1, b.delta2, cfg, store3),
                        DomainError);
    }
}

TEST_CASE("learn_observable_graph recovers the xor skeleton") {
    Scm scm = fixtures::xor_scm_gapped();
    DiscoveryConfig cfg = xor_cfg();
    Environment env(scm, 90210);
    InterventionalStore store(scm.graph());
    SampleBudget b = compute_budgets(cfg, BudgetMode::full_graph);

    Admg obs = learn_observable_graph(env, scm.graph().vertices(), b.alpha, cfg.d_max, b.delta1,
                                      b.delta2, cfg, store);
    CHECK(obs.directed_edges() == std::vector<std::pair<VarId, VarId>>{{kX1, kX2}, {kX2, kY}});
    CHECK(obs.bidirected_edges().empty());
}

TEST_CASE("exhaustive-w reduction union recovers every dag exactly") {
    // Pure graph identity behind the observable-graph algorithm: the union of
    // Tr(G_do(W)) over every intervention set equals the true edge set.
    Rng rng(606);
    for (int trial = 0; trial < 30; ++trial) {
        int n = 2 + static_cast<int>(rng.uniform_below(5));
        Admg g = fixtures::random_admg(n, 0.45, 0.0, rng);
        std::set<std::pair<VarId, VarId>> accum;
        for (uint64_t mask = 0; mask < (1ULL << n); ++mask) {
            Admg cut = do_graph(g, VertexSet(mask));
            for (auto e : transitive_reduction(transitive_closure(cut)).directed_edges()) {
                accum.insert(e);
            }
        }
        auto truth = g.directed_edges();
        CHECK(accum == std::set<std::pair<VarId, VarId>>(truth.begin(), truth.end()));
    }
}

TEST_CASE("detect_latent_confounder on the xor instance") {
    Scm scm = fixtures::xor_scm_gapped();
    DiscoveryConfig cfg = xor_cfg();
    Environment env(scm, 31);
    InterventionalStore store(scm.graph());
    SampleBudget b = compute_budgets(cfg, BudgetMode::full_graph);

    Admg learned = learn_observable_graph(env, scm.graph().vertices(), b.alpha, cfg.d_max, b.delta1,
                                          b.delta2, cfg, store);

    LatentTestOutcome res;
    Admg with_latent = detect_latent_confounder(learned, kX2, kY, b.delta2, b.delta3, b.delta4,
                                                store, env, cfg, {}, &res);
    CHECK(with_latent.has_bidirected(kX2, kY));
    CHECK(res.confounded);
    CHECK(res.xi == kX2);
    CHECK(res.xj == kY);

    SUBCASE("clean pairs add nothing") {
        LatentTestOutcome r2;
        Admg g2 = detect_latent_confounder(with_latent, kX1, kX2, b.delta2, b.delta3, b.delta4,
                                           store, env, cfg, {}, &r2);
        CHECK_FALSE(r2.confounded);
        CHECK(g2.bidirected_edges() == with_latent.bidirected_edges());

        LatentTestOutcome r3;
        Admg g3 = detect_latent_confounder(g2, kX1, kY, b.delta2, b.delta3, b.delta4, store, env,
                                           cfg, {}, &r3);
        CHECK_FALSE(r3.confounded);
    }

    SUBCASE("repeat calls are graph-idempotent") {
        Admg again = detect_latent_confounder(with_latent, kX2, kY, b.delta2, b.delta3, b.delta4,
                                              store, env, cfg);
        CHECK(again == with_latent);
    }

    SUBCASE("pair order flips so the reward is never the target") {
        LatentTestOutcome r4;
        detect_latent_confounder(learned, kY, kX2, b.delta2, b.delta3, b.delta4, store, env, cfg, {},
                                 &r4);
        CHECK(r4.xi == kX2);
        CHECK(r4.xj == kY);
    }
}

TEST_CASE("learn_causal_graph recovers the xor admg") {
    Scm scm = fixtures::xor_scm_gapped();
    DiscoveryConfig cfg = xor_cfg();
    Environment env(scm, 1492);
    InterventionalStore store(scm.graph());
    PullAudit audit;

    Admg learned = learn_causal_graph(env, cfg, store, {}, &audit);
    CHECK(learned == scm.graph());
    CHECK(audit.predicted == env.total_pulls());
    CHECK(store.total_samples() == env.total_pulls());

    SUBCASE("every pull is in the reward log") {
        CHECK(env.log().total() == env.total_pulls());
        long long from_runs = 0;
        for (const auto& run : env.log().runs()) from_runs += run.count;
        CHECK(from_runs == env.total_pulls());
    }
}

TEST_CASE("learn_causal_graph on a markovian instance finds no confounders") {
    Admg g({"A", "B", "Y"}, 2);
    g.add_edge(0, 1);
    g.add_edge(1, 2);
    GapParams gaps;
    gaps.epsilon = 0.1;
    gaps.gamma = 0.1;
    Scm scm = random_scm(g, gaps, 404);

    DiscoveryConfig cfg;
    cfg.epsilon = 0.1;
    cfg.gamma = 0.1;
    cfg.eta = 0.2;
    cfg.delta = 0.2;
    cfg.d_max = 1;
    cfg.k = 2;
    cfg.n = 3;
    Environment env(scm, 777);
    InterventionalStore store(scm.graph());
    Admg learned = learn_causal_graph(env, cfg, store);
    CHECK(learned == g);
    CHECK(learned.bidirected_edges().empty());
}

TEST_CASE("learn_causal_graph recovers the figure-1 admg") {
    Admg g = fixtures::figure1_g();
    GapParams gaps;
    Scm scm = random_scm(g, gaps, 1234);

    DiscoveryConfig cfg;
    cfg.epsilon = 0.1;
    cfg.gamma = 0.1;
    cfg.eta = 0.2;
    cfg.delta = 0.2;
    cfg.d_max = 2;
    cfg.k = 2;
    cfg.n = 4;
    Environment env(scm, 5150);
    InterventionalStore store(scm.graph());
    Admg learned = learn_causal_graph(env, cfg, store);
    CHECK(learned == g); // all four bidirected edges recovered
}

TEST_CASE("oracle-probability idealization recovers random instances exactly") {
    GapParams gaps;
    DiscoveryConfig cfg;
    cfg.epsilon = gaps.epsilon;
    cfg.gamma = gaps.gamma;
    cfg.eta = gaps.eta;
    cfg.delta = 0.2;
    cfg.k = 2;
    IdealizationOptions ideal{true, true};

    Rng rng(2112);
    int done = 0;
    for (uint64_t attempt = 0; done < 5 && attempt < 60; ++attempt) {
        int n = 3 + static_cast<int>(rng.uniform_below(3));
        Admg g = fixtures::random_admg(n, 0.35, 0.25, rng);
        GapParams bounded = gaps;
        bounded.max_retries = 150;
        std::optional<Scm> scm;
        try {
            scm.emplace(random_scm(g, bounded, 900 + attempt));
        } catch (const GenerationError&) {
            continue;
        }
        int d_max = 1;
        for (int v = 0; v < n; ++v) d_max = std::max(d_max, g.parents_mask(v).size());
        cfg.d_max = d_max;
        cfg.n = n;
        Environment env(*scm, 1);
        InterventionalStore store(scm->graph());
        Admg learned = learn_causal_graph(env, cfg, store, ideal);
        CHECK(learned == g);
        CHECK(env.total_pulls() == 0); // the idealization draws nothing
        ++done;
    }
    CHECK(done == 5);
}
