#ifndef CBANDIT_SCM_HPP
#define CBANDIT_SCM_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "graph.hpp"
#include "rng.hpp"

namespace cbandit {

// Hard intervention: a partial assignment of observed variables. An empty
// assignment is the observational regime. The reward must never be assigned;
// that is enforced wherever an intervention meets an Scm or arm set.
class Intervention {
public:
    Intervention() = default;

    bool empty() const { return assign_.empty(); }
    int size() const { return static_cast<int>(assign_.size()); }
    bool intervenes(VarId v) const { return value(v) >= 0; }
    int value(VarId v) const; // -1 when v is not assigned
    void set(VarId v, int val);
    Intervention with(VarId v, int val) const;
    VertexSet targets() const;
    const std::vector<std::pair<VarId, int>>& assignments() const { return assign_; }

    // Canonical text form, e.g. "do()" or "do(V1=0,V3=1)".
    std::string key(const Admg& g) const;
    static Intervention parse_key(const std::string& text, const Admg& g);

    auto operator<=>(const Intervention&) const = default;

private:
    std::vector<std::pair<VarId, int>> assign_; // sorted by variable id
};

// One full assignment of the observed variables.
struct Sample {
    std::vector<uint8_t> values;
};

struct ConfounderSpec {
    VarId a, b;                // canonical a < b, must be a bidirected edge
    std::vector<double> dist;  // distribution of the shared exogenous variable
};

// Deterministic structural table for one observed variable. Inputs in the
// canonical order: parents by ascending id, then the node's own noise, then
// incident confounders in the order they appear in ScmSpec::confounders.
// Row index is mixed-radix with the last input varying fastest.
struct MechanismSpec {
    std::vector<int> table;
};

struct ScmSpec {
    Admg graph;
    std::vector<int> domain;                 // per observed variable
    std::vector<std::vector<double>> noise;  // per observed variable
    std::vector<ConfounderSpec> confounders; // exactly the graph's bidirected edges
    std::vector<MechanismSpec> mech;         // per observed variable
};

struct ValidationReport {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    bool ok() const { return errors.empty(); }
};

// Checks the structural invariants: table normalization, mechanism totality,
// binary reward, confounder/bidirected matching. Unused inputs (a mechanism
// ignoring a declared parent or confounder) are reported as warnings.
ValidationReport validate(const ScmSpec& spec);

// Exact joint distribution over the observed variables under one intervention.
class JointDistribution {
public:
    JointDistribution(std::vector<int> domains, VarId reward);

    void add(const std::vector<uint8_t>& assignment, double p);
    double prob_of(VarId var, int val) const;
    double prob_pair(VarId v1, int x1, VarId v2, int x2) const;
    // P(tvar=tval | gvar=gval); 0 when the conditioning event has no mass.
    double conditional(VarId tvar, int tval, VarId gvar, int gval) const;
    double total() const;
    const std::unordered_map<uint64_t, double>& cells() const { return p_; }
    std::vector<uint8_t> decode(uint64_t code) const;

private:
    std::vector<int> domains_;
    std::vector<uint64_t> strides_;
    VarId reward_;
    std::unordered_map<uint64_t, double> p_;
};

class Scm {
public:
    explicit Scm(ScmSpec spec); // throws DomainError when validate() fails

    const Admg& graph() const { return spec_.graph; }
    const ScmSpec& spec() const { return spec_; }
    int var_count() const { return spec_.graph.size(); }
    int domain(VarId v) const { return spec_.domain[v]; }
    const std::vector<int>& domains() const { return spec_.domain; }

    // DomainError if the intervention touches the reward or assigns an
    // out-of-domain value.
    void check_intervention(const Intervention& iv) const;

    // count i.i.d. samples appended to `out` as packed rows of var_count() bytes.
    void draw_into(const Intervention& iv, long long count, Rng& rng, std::vector<uint8_t>& out) const;
    std::vector<Sample> draw(const Intervention& iv, long long count, Rng& rng) const;

    // Exact P(. | do(iv)) by enumerating every exogenous configuration.
    JointDistribution exact_distribution(const Intervention& iv,
                                         uint64_t exo_guard = uint64_t{1} << 24) const;
    double exact_prob(VarId var, int val, const Intervention& iv) const;
    // P(tvar=tval | gvar=gval, do(iv)); DomainError when the condition has no mass.
    double exact_conditional(VarId tvar, int tval, VarId gvar, int gval, const Intervention& iv) const;
    double expected_reward(const Intervention& iv) const; // P(Y=1 | do(iv))

    // Best expected reward over all value assignments of all POMISs of the
    // true graph; ties go to the first arm in canonical order.
    std::pair<double, Intervention> oracle_optimum(int pomis_guard = 22) const;

private:
    friend class ExoIterator;
    ScmSpec spec_;
    std::vector<int> topo_;
    // flattened evaluation plan per variable
    struct Node {
        std::vector<VarId> parents;   // ascending
        std::vector<int> conf_index;  // into spec_.confounders
        const int* table;
        int noise_dom;
    };
    std::vector<Node> plan_;

    int eval_mechanism(VarId v, const uint8_t* values, const std::vector<uint8_t>& noise_vals,
                       const std::vector<uint8_t>& conf_vals) const;
};

// Gap parameters for generated instances (mirrors the discovery config).
struct GapParams {
    double epsilon = 0.1;
    double gamma = 0.1;
    double eta = 0.2;
    int k = 2;
    int max_retries = 1000;
    int verify_max_n = 12; // exhaustive W verification guard
};

// Binary-exogenous random SCM over g, rejection-sampled until the epsilon
// ancestrality gaps, gamma latent gaps and eta support floor hold on every
// quantity the discovery algorithms can test (all-zeros realizations, every
// intervention target set W not touching the reward). Deterministic in seed.
Scm random_scm(const Admg& g, const GapParams& gaps, uint64_t seed);

} // namespace cbandit

#endif
