#ifndef CBANDIT_POMIS_LEARN_HPP
#define CBANDIT_POMIS_LEARN_HPP

#include <iosfwd>
#include <optional>
#include <set>

#include "discovery.hpp"

namespace cbandit {

// Ordered record of the latent-confounder tests a phase-1 run performed.
struct TestLedgerEntry {
    int ordinal;
    VarId z, x;
    bool confounded;
    long long samples_spent;
};

class TestLedger {
public:
    bool tested(VarId a, VarId b) const {
        return tested_.count({std::min(a, b), std::max(a, b)}) > 0;
    }
    void record(VarId z, VarId x, bool confounded, long long spent);
    const std::vector<TestLedgerEntry>& entries() const { return entries_; }

    // columns: ordinal, Z, X, outcome, samples_spent
    void export_csv(std::ostream& out, const Admg& g) const;

private:
    std::vector<TestLedgerEntry> entries_;
    std::set<std::pair<VarId, VarId>> tested_;
};

// The next latent test the working graph makes necessary: an untested pair
// (Z, X) where Z is a reward ancestor with no known confounder to Y and X
// lies in the territory left after cutting Z's parents and known siblings.
// Returns nothing when the loop is done.
std::optional<std::pair<VarId, VarId>> next_required_pair(const Admg& g, const TestLedger& ledger);

struct PomisLearnResult {
    Admg graph;           // learned structure; edges live inside the ancestral scope
    PomisFamily family;
    TestLedger ledger;
    VertexSet ancestors_of_reward; // as learned by the closure stage
    long long total_pulls = 0;
    SampleBudget closure_budget;
    SampleBudget scope_budget;
};

// Phase 1 end to end: ancestor discovery, observable graph on the ancestral
// scope, reward-adjacent latent tests, then the territory-driven loop, and
// finally the POMIS family of the learned graph.
PomisLearnResult learn_pomis_structure(Environment& env, const DiscoveryConfig& cfg,
                                       InterventionalStore& store,
                                       const IdealizationOptions& ideal = {},
                                       PullAudit* audit = nullptr);

// The comparison arm: identical closure and observable stages, then a latent
// test for every pair inside the ancestral scope.
struct FullLatentResult {
    Admg graph;
    PomisFamily family;
    VertexSet ancestors_of_reward;
    long long observable_pulls = 0; // pulls consumed through the observable stage
    long long total_pulls = 0;
};

FullLatentResult learn_full_latents_on_ancestors(Environment& env, const DiscoveryConfig& cfg,
                                                 InterventionalStore& store,
                                                 const IdealizationOptions& ideal = {},
                                                 PullAudit* audit = nullptr);

// Certificate that two graphs (equal apart from g_sparse missing some of
// g_true's bidirected edges) have different POMIS families: either a missing
// confounder to the reward (condition 1) or a missing territory-pair
// confounder (condition 2). Returns nothing iff the families coincide.
struct PomisWitness {
    int condition; // 1 or 2
    VarId z;
    VarId x; // -1 for condition 1
};

std::optional<PomisWitness> pomis_divergence_witness(const Admg& g_true, const Admg& g_sparse);

} // namespace cbandit

#endif
