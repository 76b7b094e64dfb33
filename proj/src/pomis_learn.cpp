#include "pomis_learn.hpp"

#include <ostream>

#include "errors.hpp"

namespace cbandit {

void TestLedger::record(VarId z, VarId x, bool confounded, long long spent) {
    auto key = std::pair(std::min(z, x), std::max(z, x));
    if (tested_.count(key)) throw DomainError("pair already tested");
    tested_.insert(key);
    entries_.push_back({static_cast<int>(entries_.size()), z, x, confounded, spent});
}

void TestLedger::export_csv(std::ostream& out, const Admg& g) const {
    out << "ordinal,Z,X,outcome,samples_spent\n";
    for (const auto& e : entries_) {
        out << e.ordinal << "," << g.name(e.z) << "," << g.name(e.x) << ","
            << (e.confounded ? "confounded" : "clear") << "," << e.samples_spent << "\n";
    }
}

std::optional<std::pair<VarId, VarId>> next_required_pair(const Admg& g, const TestLedger& ledger) {
    const VarId y = g.reward();
    for (VarId z : ancestors(g, y).to_vector()) {
        if (g.has_bidirected(z, y)) continue;
        VertexSet removal = g.parents_mask(z) | g.siblings_mask(z);
        removal.erase(y); // Bi(.) excludes the reward, and Y is never cut
        VertexSet territory = muct(do_graph(g, removal), y);
        territory.erase(y);
        territory.erase(z);
        for (VarId x : territory.to_vector()) {
            if (!ledger.tested(z, x)) return std::pair(z, x);
        }
    }
    return std::nullopt;
}

namespace {

struct ScopeStages {
    Admg learned;
    VertexSet an_reward;
    VertexSet scope;
    DiscoveryConfig scoped_cfg;
    SampleBudget closure_budget;
    SampleBudget scope_budget;
};

// Shared first two stages: ancestor set via the observational-regime closure,
// then the observable graph on the ancestral scope.
ScopeStages run_scope_stages(Environment& env, const DiscoveryConfig& cfg, InterventionalStore& store,
                             const IdealizationOptions& ideal, PullAudit* audit) {
    const Admg& shape = env.scm().graph();
    const VarId y = shape.reward();

    DiscoveryConfig total_cfg = cfg;
    total_cfg.n = shape.size();
    SampleBudget closure_budget = compute_budgets(total_cfg, BudgetMode::closure_only);

    Digraph closure =
        learn_transitive_closure(env, shape.vertices(), VertexSet(), closure_budget.delta1,
                                 closure_budget.delta2, total_cfg, store, ideal, "ancestor closure",
                                 audit);
    VertexSet an_reward;
    for (int v = 0; v < shape.size(); ++v) {
        if (v != y && closure.has_edge(v, y)) an_reward.insert(v);
    }
    VertexSet scope = an_reward;
    scope.insert(y);

    DiscoveryConfig scoped_cfg = cfg;
    scoped_cfg.n = scope.size();
    SampleBudget sb = compute_budgets(scoped_cfg, BudgetMode::pomis);

    Admg learned = learn_observable_graph(env, scope, sb.alpha, scoped_cfg.d_max, sb.delta1,
                                          sb.delta2, scoped_cfg, store, ideal, audit);
    return {std::move(learned), an_reward, scope, scoped_cfg, closure_budget, sb};
}

} // namespace

PomisLearnResult learn_pomis_structure(Environment& env, const DiscoveryConfig& cfg,
                                       InterventionalStore& store, const IdealizationOptions& ideal,
                                       PullAudit* audit) {
    const long long pulls_at_start = env.total_pulls();
    ScopeStages st = run_scope_stages(env, cfg, store, ideal, audit);
    const VarId y = st.learned.reward();
    const SampleBudget& sb = st.scope_budget;

    PomisLearnResult out{std::move(st.learned), {}, {}, st.an_reward, 0, st.closure_budget, sb};

    // Reward-adjacent confounders first: they decide which territories the
    // while-loop still has to look at.
    for (VarId xi : st.an_reward.to_vector()) {
        LatentTestOutcome res;
        out.graph = detect_latent_confounder(out.graph, xi, y, sb.delta2, sb.delta3, sb.delta4, store,
                                             env, st.scoped_cfg, ideal, &res, audit);
        out.ledger.record(xi, y, res.confounded, res.samples_spent);
    }

    while (auto pair = next_required_pair(out.graph, out.ledger)) {
        auto [z, x] = *pair;
        LatentTestOutcome res;
        out.graph = detect_latent_confounder(out.graph, z, x, sb.delta2, sb.delta3, sb.delta4, store,
                                             env, st.scoped_cfg, ideal, &res, audit);
        out.ledger.record(z, x, res.confounded, res.samples_spent);
    }

    out.family = enumerate_pomis_within(out.graph, st.scope);
    out.total_pulls = env.total_pulls() - pulls_at_start;
    return out;
}

FullLatentResult learn_full_latents_on_ancestors(Environment& env, const DiscoveryConfig& cfg,
                                                 InterventionalStore& store,
                                                 const IdealizationOptions& ideal, PullAudit* audit) {
    const long long pulls_at_start = env.total_pulls();
    ScopeStages st = run_scope_stages(env, cfg, store, ideal, audit);
    const SampleBudget& sb = st.scope_budget;

    FullLatentResult out{std::move(st.learned), {}, st.an_reward, 0, 0};
    out.observable_pulls = env.total_pulls() - pulls_at_start;

    std::vector<VarId> members = st.scope.to_vector();
    for (size_t i = 0; i < members.size(); ++i) {
        for (size_t j = i + 1; j < members.size(); ++j) {
            out.graph = detect_latent_confounder(out.graph, members[i], members[j], sb.delta2,
                                                 sb.delta3, sb.delta4, store, env, st.scoped_cfg,
                                                 ideal, nullptr, audit);
        }
    }
    out.family = enumerate_pomis_within(out.graph, st.scope);
    out.total_pulls = env.total_pulls() - pulls_at_start;
    return out;
}

std::optional<PomisWitness> pomis_divergence_witness(const Admg& g_true, const Admg& g_sparse) {
    if (g_true.size() != g_sparse.size() || g_true.reward() != g_sparse.reward()) {
        throw DomainError("witness needs graphs over the same vertices and reward");
    }
    for (int v = 0; v < g_true.size(); ++v) {
        if (g_true.parents_mask(v) != g_sparse.parents_mask(v)) {
            throw DomainError("witness needs identical directed edges");
        }
        if (!g_sparse.siblings_mask(v).subset_of(g_true.siblings_mask(v))) {
            throw DomainError("witness needs the sparse graph's bidirected edges to be a subset");
        }
    }

    const VarId y = g_true.reward();
    VertexSet an = ancestors(g_true, y);

    for (VarId z : an.to_vector()) {
        if (g_true.has_bidirected(z, y) && !g_sparse.has_bidirected(z, y)) {
            return PomisWitness{1, z, -1};
        }
    }
    for (VarId z : an.to_vector()) {
        if (g_true.has_bidirected(z, y)) continue; // both graphs have it or condition 1 fired
        VertexSet removal = g_sparse.parents_mask(z) | g_sparse.siblings_mask(z);
        removal.erase(y);
        VertexSet territory = muct(do_graph(g_sparse, removal), y);
        territory.erase(y);
        territory.erase(z);
        for (VarId x : territory.to_vector()) {
            if (g_true.has_bidirected(x, z) && !g_sparse.has_bidirected(x, z)) {
                return PomisWitness{2, z, x};
            }
        }
    }
    return std::nullopt;
}

} // namespace cbandit
