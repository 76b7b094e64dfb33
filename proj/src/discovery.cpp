#include "discovery.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "errors.hpp"

namespace cbandit {

// ---------------------------------------------------------------------------
// Budgets

void DiscoveryConfig::validate() const {
    auto bad = [](const std::string& m) { throw ConfigError("discovery config: " + m); };
    if (!(epsilon > 0 && epsilon < 1)) bad("epsilon must be in (0,1)");
    if (!(gamma > 0 && gamma < 1)) bad("gamma must be in (0,1)");
    if (!(eta > 0 && eta < 1)) bad("eta must be in (0,1)");
    if (!(delta > 0 && delta < 1)) bad("delta must be in (0,1)");
    if (d_max < 1) bad("d_max must be at least 1");
    if (k < 2) bad("k must be at least 2");
    if (n < 1) bad("n must be at least 1");
}

namespace {
// log arguments use the scope size clamped to 2 so one-vertex scopes do not
// divide by ln(1)=0
double ln_clamped(int n) { return std::log(static_cast<double>(std::max(n, 2))); }
long long ceil_ll(double v) { return static_cast<long long>(std::ceil(v)); }
} // namespace

long long budget_a(const DiscoveryConfig& cfg, double delta1) {
    double coeff = std::max(8.0 / (cfg.epsilon * cfg.epsilon), 8.0 / (cfg.gamma * cfg.gamma));
    double arg = 2.0 * cfg.n * cfg.k * cfg.k / delta1;
    return std::max<long long>(1, ceil_ll(coeff * std::log(arg)));
}

long long budget_b(const DiscoveryConfig& cfg, double delta2) {
    double coeff = 8.0 / (cfg.epsilon * cfg.epsilon);
    double arg = 2.0 * cfg.n * cfg.k * cfg.k / delta2;
    return std::max<long long>(1, ceil_ll(coeff * std::log(arg)));
}

long long budget_c(const DiscoveryConfig& cfg, double delta3, double delta4) {
    double n2 = static_cast<double>(cfg.n) * cfg.n;
    double t1 = 16.0 / (cfg.eta * cfg.gamma * cfg.gamma) * std::log(2.0 * n2 * cfg.k * cfg.k / delta3);
    double t2 = 1.0 / (2.0 * cfg.eta * cfg.eta) * std::log(2.0 * n2 * cfg.k * cfg.k / delta4);
    return std::max<long long>(1, ceil_ll(t1 + t2));
}

long long budget_rounds(double alpha, int d_max, int n) {
    return std::max<long long>(1, ceil_ll(8.0 * alpha * d_max * std::log(static_cast<double>(n))));
}

SampleBudget compute_budgets(const DiscoveryConfig& cfg, BudgetMode mode) {
    cfg.validate();
    SampleBudget out;
    const double n = cfg.n;
    const double d = cfg.d_max;
    const double ln_n = ln_clamped(cfg.n);
    switch (mode) {
        case BudgetMode::closure_only:
            out.alpha = 1;
            out.rounds = 1;
            out.delta1 = cfg.delta / (2 * n);
            out.delta2 = cfg.delta / 2;
            out.delta3 = out.delta4 = out.delta2;
            break;
        case BudgetMode::observable:
            out.alpha = 2 * d * std::log(2.0 / cfg.delta + 2.0) / ln_n;
            out.delta1 = cfg.delta / (32 * out.alpha * d * n * ln_n);
            out.delta2 = cfg.delta / (32 * out.alpha * d * ln_n);
            out.delta3 = out.delta4 = out.delta2;
            out.rounds = budget_rounds(out.alpha, cfg.d_max, cfg.n);
            break;
        case BudgetMode::full_graph:
        case BudgetMode::pomis:
            // the pomis split is the full-graph split with n set to the size
            // of the ancestral scope
            out.alpha = 2 * d * std::log(4.0 / cfg.delta + 2.0) / ln_n;
            out.delta1 = cfg.delta / (64 * out.alpha * d * n * ln_n);
            out.delta2 = cfg.delta / (64 * out.alpha * d * ln_n);
            out.delta3 = out.delta4 = out.delta2;
            out.rounds = budget_rounds(out.alpha, cfg.d_max, cfg.n);
            break;
    }
    out.a = budget_a(cfg, out.delta1);
    out.b = budget_b(cfg, out.delta2);
    out.c = budget_c(cfg, out.delta3, out.delta4);
    return out;
}

void write_budget_report(std::ostream& out, const SampleBudget& b) {
    out << "a=" << b.a << "\n"
        << "b=" << b.b << "\n"
        << "c=" << b.c << "\n"
        << "rounds=" << b.rounds << "\n"
        << "alpha=" << b.alpha << "\n"
        << "delta1=" << b.delta1 << "\n"
        << "delta2=" << b.delta2 << "\n"
        << "delta3=" << b.delta3 << "\n"
        << "delta4=" << b.delta4 << "\n";
}

// ---------------------------------------------------------------------------
// Store and environment

Dataset& InterventionalStore::obtain(const Intervention& iv) {
    std::string key = iv.key(*graph_);
    auto it = data_.find(key);
    if (it == data_.end()) {
        Dataset ds;
        ds.iv = iv;
        ds.key = key;
        ds.stride = graph_->size();
        it = data_.emplace(std::move(key), std::move(ds)).first;
    }
    return it->second;
}

const Dataset* InterventionalStore::find(const Intervention& iv) const {
    auto it = data_.find(iv.key(*graph_));
    return it == data_.end() ? nullptr : &it->second;
}

long long InterventionalStore::total_samples() const {
    long long total = 0;
    for (const auto& [key, ds] : data_) total += ds.count();
    return total;
}

void InterventionalStore::export_csv(std::ostream& out) const {
    out << "intervention_key,sample_index,var,value\n";
    for (const auto& [key, ds] : data_) {
        for (long long i = 0; i < ds.count(); ++i) {
            const uint8_t* r = ds.row(i);
            for (int v = 0; v < ds.stride; ++v) {
                out << key << "," << i << "," << graph_->name(v) << "," << int(r[v]) << "\n";
            }
        }
    }
}

const JointDistribution& InterventionalStore::oracle_joint(const Scm& scm, const Intervention& iv) {
    std::string key = iv.key(*graph_);
    auto it = oracle_cache_.find(key);
    if (it == oracle_cache_.end()) {
        it = oracle_cache_.emplace(key, scm.exact_distribution(iv)).first;
    }
    return it->second;
}

uint32_t PullLog::intern(const Intervention& iv, const std::string& key) {
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    uint32_t id = static_cast<uint32_t>(keys_.size());
    keys_.push_back(iv);
    index_.emplace(key, id);
    return id;
}

void PullLog::append(uint32_t key_id, bool reward) {
    if (!runs_.empty() && runs_.back().key == key_id) {
        ++runs_.back().count;
    } else {
        runs_.push_back({key_id, 1});
    }
    if ((total_ & 63) == 0) bits_.push_back(0);
    if (reward) bits_.back() |= 1ULL << (total_ & 63);
    ++total_;
}

void Environment::draw(const Intervention& iv, long long count, Dataset& into,
                       const std::string& provenance) {
    if (count <= 0) return;
    const int n = scm_->var_count();
    if (into.counts.empty()) {
        into.counts.resize(n);
        for (int v = 0; v < n; ++v) into.counts[v].assign(scm_->domain(v), 0);
    }
    size_t base = into.rows.size();
    scm_->draw_into(iv, count, rng_, into.rows);
    into.provenance.emplace_back(provenance, count);
    uint32_t key_id = log_.intern(iv, into.key);
    const VarId y = scm_->graph().reward();
    for (long long i = 0; i < count; ++i) {
        const uint8_t* r = into.rows.data() + base + i * n;
        for (int v = 0; v < n; ++v) ++into.counts[v][r[v]];
        log_.append(key_id, r[y] != 0);
    }
}

// ---------------------------------------------------------------------------
// Estimators and tests

Estimate estimate(const Dataset& data, VarId var, int value) {
    long long total = data.count();
    if (total == 0) return {0.0, 0};
    long long hits = 0;
    if (!data.counts.empty()) {
        hits = data.counts[var][value];
    } else {
        for (long long i = 0; i < total; ++i) hits += data.row(i)[var] == value;
    }
    return {static_cast<double>(hits) / total, total};
}

Estimate estimate(const Dataset& data, VarId var, int value, VarId cvar, int cval) {
    long long support = 0, hits = 0;
    for (long long i = 0, total = data.count(); i < total; ++i) {
        const uint8_t* r = data.row(i);
        if (r[cvar] != cval) continue;
        ++support;
        hits += r[var] == value;
    }
    if (support == 0) return {0.0, 0};
    return {static_cast<double>(hits) / support, support};
}

bool ancestrality_test(const Dataset& base, std::span<const Dataset* const> per_value, VarId target,
                       int target_domain, double epsilon) {
    for (int tv = 0; tv < target_domain; ++tv) {
        double p_base = estimate(base, target, tv).p;
        for (const Dataset* ds : per_value) {
            if (std::abs(estimate(*ds, target, tv).p - p_base) > epsilon / 2) return true;
        }
    }
    return false;
}

bool latent_test(std::span<const Dataset* const> per_value, const Dataset& base, VarId xi,
                 int xi_domain, VarId xj, int xj_domain, double gamma) {
    for (int a = 0; a < xi_domain; ++a) {
        for (int b = 0; b < xj_domain; ++b) {
            double lhs = estimate(*per_value[a], xj, b).p;
            double rhs = estimate(base, xj, b, xi, a).p;
            if (std::abs(lhs - rhs) > gamma / 2) return true;
        }
    }
    return false;
}

// ---------------------------------------------------------------------------
// Digraph helpers

uint64_t Digraph::reach_from(int v) const {
    uint64_t seen = 0;
    uint64_t frontier = kids[v];
    while (frontier) {
        seen |= frontier;
        uint64_t next = 0;
        uint64_t f = frontier;
        while (f) {
            int u = __builtin_ctzll(f);
            f &= f - 1;
            next |= kids[u];
        }
        frontier = next & ~seen;
    }
    return seen;
}

Digraph Digraph::reduction() const {
    std::vector<uint64_t> reach(n);
    for (int v = 0; v < n; ++v) reach[v] = reach_from(v);
    Digraph out(n);
    for (int u = 0; u < n; ++u) {
        uint64_t ks = kids[u];
        while (ks) {
            int v = __builtin_ctzll(ks);
            ks &= ks - 1;
            bool redundant = false;
            uint64_t others = kids[u] & ~(1ULL << v);
            while (others) {
                int w = __builtin_ctzll(others);
                others &= others - 1;
                if ((reach[w] >> v) & 1ULL) {
                    redundant = true;
                    break;
                }
            }
            if (!redundant) out.add_edge(u, v);
        }
    }
    return out;
}

std::vector<std::pair<int, int>> Digraph::edges() const {
    std::vector<std::pair<int, int>> out;
    for (int t = 0; t < n; ++t) {
        uint64_t ks = kids[t];
        while (ks) {
            int h = __builtin_ctzll(ks);
            ks &= ks - 1;
            out.emplace_back(t, h);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Algorithms

namespace {

Intervention zeros_on(VertexSet w) {
    Intervention iv;
    for (VarId v : w.to_vector()) iv.set(v, 0);
    return iv;
}

// Oracle-side ancestrality decision: exact probabilities, same threshold.
bool oracle_ancestrality(InterventionalStore& store, const Scm& scm, const Intervention& base_iv,
                         VarId xi, VarId xj, double epsilon) {
    const JointDistribution& base = store.oracle_joint(scm, base_iv);
    for (int a = 0; a < scm.domain(xi); ++a) {
        const JointDistribution& cut = store.oracle_joint(scm, base_iv.with(xi, a));
        for (int b = 0; b < scm.domain(xj); ++b) {
            if (std::abs(cut.prob_of(xj, b) - base.prob_of(xj, b)) > epsilon / 2) return true;
        }
    }
    return false;
}

bool oracle_latent(InterventionalStore& store, const Scm& scm, const Intervention& base_iv, VarId xi,
                   VarId xj, double gamma) {
    const JointDistribution& base = store.oracle_joint(scm, base_iv);
    for (int a = 0; a < scm.domain(xi); ++a) {
        const JointDistribution& cut = store.oracle_joint(scm, base_iv.with(xi, a));
        for (int b = 0; b < scm.domain(xj); ++b) {
            double lhs = cut.prob_of(xj, b);
            double rhs = base.conditional(xj, b, xi, a); // 0 on empty support
            if (std::abs(lhs - rhs) > gamma / 2) return true;
        }
    }
    return false;
}

} // namespace

Digraph learn_transitive_closure(Environment& env, VertexSet scope, VertexSet w, double delta1,
                                 double delta2, const DiscoveryConfig& cfg,
                                 InterventionalStore& store, const IdealizationOptions& ideal,
                                 const std::string& provenance, PullAudit* audit) {
    const Scm& scm = env.scm();
    const Admg& g = scm.graph();
    if (!w.subset_of(scope)) throw DomainError("intervention set must lie inside the scope");
    if (w.contains(g.reward())) throw DomainError("the reward cannot be an intervention target");

    const long long a_budget = budget_a(cfg, delta1);
    const long long b_budget = budget_b(cfg, delta2);
    const Intervention base_iv = zeros_on(w);

    VertexSet targets = scope.minus(w);
    targets.erase(g.reward());

    Dataset& base_ds = store.obtain(base_iv);
    base_ds.is_base = true;
    if (!ideal.exact_probabilities) {
        env.draw(base_iv, b_budget, base_ds, provenance + " base");
        if (audit) audit->predicted += b_budget;
        for (VarId v : targets.to_vector()) {
            for (int val = 0; val < scm.domain(v); ++val) {
                env.draw(base_iv.with(v, val), a_budget, store.obtain(base_iv.with(v, val)),
                         provenance + " override");
            }
            if (audit) audit->predicted += static_cast<long long>(scm.domain(v)) * a_budget;
        }
    }

    Digraph closure(g.size());
    VertexSet testable = scope.minus(w);
    for (VarId xi : targets.to_vector()) {
        std::vector<const Dataset*> per_value;
        if (!ideal.exact_probabilities) {
            for (int val = 0; val < scm.domain(xi); ++val) {
                per_value.push_back(store.find(base_iv.with(xi, val)));
            }
        }
        for (VarId xj : testable.to_vector()) {
            if (xj == xi) continue;
            bool edge = ideal.exact_probabilities
                            ? oracle_ancestrality(store, scm, base_iv, xi, xj, cfg.epsilon)
                            : ancestrality_test(*store.find(base_iv), per_value, xj, scm.domain(xj),
                                                cfg.epsilon);
            if (edge) closure.add_edge(xi, xj);
        }
    }
    return closure;
}

Admg learn_observable_graph(Environment& env, VertexSet scope, double alpha, int d_max,
                            double delta1, double delta2, const DiscoveryConfig& cfg,
                            InterventionalStore& store, const IdealizationOptions& ideal,
                            PullAudit* audit) {
    const Admg& g = env.scm().graph();
    const VarId y = g.reward();
    std::vector<VarId> candidates; // intervenable scope members
    for (VarId v : scope.to_vector()) {
        if (v != y) candidates.push_back(v);
    }

    std::vector<VertexSet> rounds;
    if (ideal.exhaustive_w) {
        const size_t m = candidates.size();
        for (uint64_t mask = 0; mask < (1ULL << m); ++mask) {
            VertexSet w;
            for (size_t i = 0; i < m; ++i) {
                if ((mask >> i) & 1ULL) w.insert(candidates[i]);
            }
            rounds.push_back(w);
        }
    } else {
        long long count = budget_rounds(alpha, d_max, scope.size());
        const double p_include = 1.0 - 1.0 / (2.0 * d_max);
        for (long long r = 0; r < count; ++r) {
            VertexSet w;
            for (VarId v : candidates) {
                if (env.rng().bernoulli(p_include)) w.insert(v);
            }
            rounds.push_back(w);
        }
    }

    Digraph accum(g.size());
    int round_no = 0;
    for (const VertexSet& w : rounds) {
        Digraph closure = learn_transitive_closure(env, scope, w, delta1, delta2, cfg, store, ideal,
                                                   "obs round " + std::to_string(round_no), audit);
        Digraph red = closure.reduction();
        for (auto [t, h] : red.edges()) accum.add_edge(t, h);
        ++round_no;
    }

    Admg out(g.names(), y);
    for (auto [t, h] : accum.edges()) {
        try {
            out.add_edge(t, h);
        } catch (const DomainError&) {
            throw DomainError("learned observable graph contains a directed cycle (finite-sample "
                              "test failure); edge " +
                              g.name(t) + " -> " + g.name(h));
        }
    }
    return out;
}

Admg detect_latent_confounder(const Admg& g, VarId xi, VarId xj, double delta2, double delta3,
                              double delta4, InterventionalStore& store, Environment& env,
                              const DiscoveryConfig& cfg, const IdealizationOptions& ideal,
                              LatentTestOutcome* outcome, PullAudit* audit) {
    const Scm& scm = env.scm();
    const VarId y = g.reward();
    g.check_vertex(xi);
    g.check_vertex(xj);
    if (xi == xj) throw DomainError("latent test needs two distinct variables");

    // Order the pair: the second element must not be a learned ancestor of
    // the first, and the first is the intervention target so it cannot be the
    // reward.
    if (xi == y) std::swap(xi, xj);
    if (ancestors(g, xi).contains(xj)) std::swap(xi, xj);
    if (xi == y) {
        throw DomainError("pair (" + g.name(xi) + ", " + g.name(xj) +
                          ") cannot be tested: the reward cannot be an intervention target");
    }

    const long long pulls_before = env.total_pulls();
    const long long c_budget = budget_c(cfg, delta3, delta4);
    // Freshly created datasets still need the do(x_i, w) side; delta2 stands
    // in for the observable phase's per-dataset confidence here.
    const long long a_budget = budget_a(cfg, delta2);

    VertexSet required = (g.parents_mask(xi) | g.parents_mask(xj)).minus(VertexSet({xi, xj}));

    // Qualifying stored base: covers the parents, excludes the pair. Prefer
    // the one needing the smallest top-up; ties go to the smallest key.
    const Dataset* chosen = nullptr;
    for (const auto& [key, ds] : store.datasets()) {
        if (!ds.is_base) continue;
        VertexSet targets = ds.iv.targets();
        if (!required.subset_of(targets)) continue;
        if (targets.contains(xi) || targets.contains(xj)) continue;
        if (!chosen || ds.count() > chosen->count()) chosen = &ds;
    }
    Intervention base_iv = chosen ? chosen->iv : zeros_on(required);

    Dataset& base_ds = store.obtain(base_iv);
    base_ds.is_base = true;
    if (!ideal.exact_probabilities) {
        long long top_up = std::max<long long>(0, c_budget - base_ds.count());
        env.draw(base_iv, top_up, base_ds, "latent base top-up");
        for (int val = 0; val < scm.domain(xi); ++val) {
            Dataset& ds = store.obtain(base_iv.with(xi, val));
            env.draw(base_iv.with(xi, val), std::max<long long>(0, a_budget - ds.count()), ds,
                     "latent override top-up");
        }
        if (audit) audit->predicted += env.total_pulls() - pulls_before;
    }

    bool confounded;
    if (ideal.exact_probabilities) {
        confounded = oracle_latent(store, scm, base_iv, xi, xj, cfg.gamma);
    } else {
        std::vector<const Dataset*> per_value;
        for (int val = 0; val < scm.domain(xi); ++val) {
            per_value.push_back(store.find(base_iv.with(xi, val)));
        }
        confounded = latent_test(per_value, base_ds, xi, scm.domain(xi), xj, scm.domain(xj), cfg.gamma);
    }

    if (outcome) {
        outcome->xi = xi;
        outcome->xj = xj;
        outcome->confounded = confounded;
        outcome->samples_spent = env.total_pulls() - pulls_before;
        outcome->dataset_key = base_ds.key;
    }
    Admg out = g;
    if (confounded) out.add_bidirected(xi, xj);
    return out;
}

Admg learn_causal_graph(Environment& env, const DiscoveryConfig& cfg, InterventionalStore& store,
                        const IdealizationOptions& ideal, PullAudit* audit) {
    DiscoveryConfig scoped = cfg;
    scoped.n = env.scm().graph().size();
    SampleBudget budget = compute_budgets(scoped, BudgetMode::full_graph);

    const Admg& truth_shape = env.scm().graph();
    Admg learned =
        learn_observable_graph(env, truth_shape.vertices(), budget.alpha, scoped.d_max, budget.delta1,
                               budget.delta2, scoped, store, ideal, audit);
    for (int i = 0; i < truth_shape.size(); ++i) {
        for (int j = i + 1; j < truth_shape.size(); ++j) {
            learned = detect_latent_confounder(learned, i, j, budget.delta2, budget.delta3,
                                               budget.delta4, store, env, scoped, ideal, nullptr, audit);
        }
    }
    return learned;
}

} // namespace cbandit
