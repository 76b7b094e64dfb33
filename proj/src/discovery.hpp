#ifndef CBANDIT_DISCOVERY_HPP
#define CBANDIT_DISCOVERY_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "graph.hpp"
#include "rng.hpp"
#include "scm.hpp"

namespace cbandit {

// ---------------------------------------------------------------------------
// Configuration and sample budgets

struct DiscoveryConfig {
    double epsilon = 0.1; // ancestrality gap
    double gamma = 0.1;   // latent gap
    double eta = 0.2;     // conditional support floor
    double delta = 0.2;   // overall failure budget
    int d_max = 1;        // degree bound (must dominate the true max in-degree)
    int k = 2;            // domain size of non-reward variables
    int n = 0;            // vertex count of the scope the budgets cover

    void validate() const; // throws ConfigError
};

enum class BudgetMode { closure_only, observable, full_graph, pomis };

struct SampleBudget {
    long long a = 0, b = 0, c = 0;
    long long rounds = 1;
    double alpha = 1;
    double delta1 = 0, delta2 = 0, delta3 = 0, delta4 = 0;
};

// The raw per-dataset sample counts; natural logarithm throughout.
long long budget_a(const DiscoveryConfig& cfg, double delta1);
long long budget_b(const DiscoveryConfig& cfg, double delta2);
long long budget_c(const DiscoveryConfig& cfg, double delta3, double delta4);
long long budget_rounds(double alpha, int d_max, int n);

// Confidence splits and round counts for each stage of the pipeline. For
// pomis mode the caller sets cfg.n to the size of the learned ancestral scope.
SampleBudget compute_budgets(const DiscoveryConfig& cfg, BudgetMode mode);

// ---------------------------------------------------------------------------
// Interventional data

struct Dataset {
    Intervention iv;
    std::string key;
    int stride = 0;            // bytes per sample = number of observed variables
    std::vector<uint8_t> rows; // packed samples
    bool is_base = false;      // drawn as a base do(w) dataset (latent-test search space)
    std::vector<std::pair<std::string, long long>> provenance;
    // per-variable value counts, maintained incrementally on append
    std::vector<std::vector<long long>> counts;

    long long count() const { return stride ? static_cast<long long>(rows.size()) / stride : 0; }
    const uint8_t* row(long long i) const { return rows.data() + i * stride; }
};

class InterventionalStore {
public:
    explicit InterventionalStore(const Admg& g) : graph_(&g) {}

    Dataset& obtain(const Intervention& iv); // get or create (canonical key)
    const Dataset* find(const Intervention& iv) const;
    const std::map<std::string, Dataset>& datasets() const { return data_; }
    long long total_samples() const;
    const Admg& graph() const { return *graph_; }

    // columns: intervention_key, sample_index, var, value
    void export_csv(std::ostream& out) const;

    // Cached exact joints for the oracle-probability idealization.
    const JointDistribution& oracle_joint(const Scm& scm, const Intervention& iv);

private:
    const Admg* graph_;
    std::map<std::string, Dataset> data_;
    std::map<std::string, JointDistribution> oracle_cache_;
};

// ---------------------------------------------------------------------------
// Sampling environment with a complete per-pull reward log

// Run-length encoded pull log: consecutive pulls of the same intervention
// share a run; rewards are stored one bit per pull.
class PullLog {
public:
    struct Run {
        uint32_t key;
        long long count;
    };

    uint32_t intern(const Intervention& iv, const std::string& key);
    void append(uint32_t key_id, bool reward);

    long long total() const { return total_; }
    const std::vector<Intervention>& keys() const { return keys_; }
    const std::vector<Run>& runs() const { return runs_; }
    bool reward_bit(long long i) const { return (bits_[i >> 6] >> (i & 63)) & 1ULL; }

private:
    std::vector<Intervention> keys_;
    std::map<std::string, uint32_t> index_;
    std::vector<Run> runs_;
    std::vector<uint64_t> bits_;
    long long total_ = 0;
};

class Environment {
public:
    Environment(const Scm& scm, uint64_t seed) : scm_(&scm), rng_(seed) {}

    // Draws count samples of do(iv), appends them to the dataset and logs
    // every realized reward as one bandit pull.
    void draw(const Intervention& iv, long long count, Dataset& into, const std::string& provenance);

    const Scm& scm() const { return *scm_; }
    Rng& rng() { return rng_; }
    long long total_pulls() const { return log_.total(); }
    const PullLog& log() const { return log_; }

private:
    const Scm* scm_;
    Rng rng_;
    PullLog log_;
};

// ---------------------------------------------------------------------------
// Estimators and the two hypothesis tests

struct Estimate {
    double p = 0;
    long long support = 0;
};

// Empirical frequency of var=value; with a condition, the conditional
// frequency, defined as 0 with support 0 when the condition never occurs.
Estimate estimate(const Dataset& data, VarId var, int value);
Estimate estimate(const Dataset& data, VarId var, int value, VarId cvar, int cval);

// True iff some value pair shifts the target's law by more than epsilon/2
// between the base do(w) data and the do(x_i,w) datasets (one per value).
bool ancestrality_test(const Dataset& base, std::span<const Dataset* const> per_value,
                       VarId target, int target_domain, double epsilon);

// True iff some value pair separates do(x_i) from conditioning on x_i by more
// than gamma/2 under the shared background intervention.
bool latent_test(std::span<const Dataset* const> per_value, const Dataset& base, VarId xi,
                 int xi_domain, VarId xj, int xj_domain, double gamma);

// ---------------------------------------------------------------------------
// Learned-structure scratch type: a plain digraph with no acyclicity
// invariant, because a closure learned from finite samples can contain
// two-cycles. Final results are converted to Admg.

struct Digraph {
    int n = 0;
    std::vector<uint64_t> kids;

    explicit Digraph(int n) : n(n), kids(n, 0) {}
    void add_edge(int t, int h) { kids[t] |= 1ULL << h; }
    bool has_edge(int t, int h) const { return (kids[t] >> h) & 1ULL; }
    uint64_t reach_from(int v) const; // vertices reachable by 1+ steps
    Digraph reduction() const;        // drop (u,v) when another child of u reaches v
    std::vector<std::pair<int, int>> edges() const;
};

// ---------------------------------------------------------------------------
// Test-time idealizations: exact probabilities instead of sample estimates
// (zero pulls), and exhaustive intervention sets instead of randomized rounds.
// Both separate algorithmic error from statistical error.

struct IdealizationOptions {
    bool exact_probabilities = false;
    bool exhaustive_w = false;
};

// Optional audit: the closed-form pull count the run should have consumed.
struct PullAudit {
    long long predicted = 0;
};

// Algorithm: fix the all-zeros realization of w, draw B base samples and A
// samples per (variable, value) override, then run every ordered ancestrality
// test within the scope. Returns the learned closure of the post-intervention
// graph restricted to scope \ w. The reward is never used as an intervention
// target. All data lands in the store.
Digraph learn_transitive_closure(Environment& env, VertexSet scope, VertexSet w, double delta1,
                                 double delta2, const DiscoveryConfig& cfg,
                                 InterventionalStore& store, const IdealizationOptions& ideal = {},
                                 const std::string& provenance = "closure", PullAudit* audit = nullptr);

// Algorithm: for ceil(8 alpha d_max ln|scope|) rounds, sample W by including
// each non-reward vertex with probability 1 - 1/(2 d_max), learn the closure
// under W, and accumulate the transitive reductions. Throws DomainError if
// the accumulated edge set is cyclic (a finite-sample failure mode).
Admg learn_observable_graph(Environment& env, VertexSet scope, double alpha, int d_max,
                            double delta1, double delta2, const DiscoveryConfig& cfg,
                            InterventionalStore& store, const IdealizationOptions& ideal = {},
                            PullAudit* audit = nullptr);

struct LatentTestOutcome {
    VarId xi = -1, xj = -1; // pair order actually tested
    bool confounded = false;
    long long samples_spent = 0;
    std::string dataset_key;
};

// Algorithm: order the pair so the second element is not a learned ancestor
// of the first, find (or create) a qualifying stored dataset, top it up to C
// samples, and run the do-see test. Returns the graph with the bidirected
// edge added on success.
Admg detect_latent_confounder(const Admg& g, VarId xi, VarId xj, double delta2, double delta3,
                              double delta4, InterventionalStore& store, Environment& env,
                              const DiscoveryConfig& cfg, const IdealizationOptions& ideal = {},
                              LatentTestOutcome* outcome = nullptr, PullAudit* audit = nullptr);

// Algorithm: observable graph over all vertices, then a latent test for every
// unordered pair. The caller owns the store.
Admg learn_causal_graph(Environment& env, const DiscoveryConfig& cfg, InterventionalStore& store,
                        const IdealizationOptions& ideal = {}, PullAudit* audit = nullptr);

// Budget report as key=value text.
void write_budget_report(std::ostream& out, const SampleBudget& b);

} // namespace cbandit

#endif
