#include "scm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace cbandit {

int Intervention::value(VarId v) const {
    for (const auto& [var, val] : assign_) {
        if (var == v) return val;
    }
    return -1;
}

void Intervention::set(VarId v, int val) {
    for (auto& [var, old] : assign_) {
        if (var == v) {
            old = val;
            return;
        }
    }
    assign_.emplace_back(v, val);
    std::sort(assign_.begin(), assign_.end());
}

Intervention Intervention::with(VarId v, int val) const {
    Intervention out = *this;
    out.set(v, val);
    return out;
}

VertexSet Intervention::targets() const {
    VertexSet s;
    for (const auto& [var, val] : assign_) s.insert(var);
    return s;
}

std::string Intervention::key(const Admg& g) const {
    std::string out = "do(";
    bool first = true;
    for (const auto& [var, val] : assign_) {
        if (!first) out += ",";
        out += g.name(var) + "=" + std::to_string(val);
        first = false;
    }
    return out + ")";
}

Intervention Intervention::parse_key(const std::string& text, const Admg& g) {
    std::string body = text;
    if (body.rfind("do(", 0) == 0 && body.back() == ')') {
        body = body.substr(3, body.size() - 4);
    }
    Intervention iv;
    std::stringstream ss(body);
    std::string part;
    while (std::getline(ss, part, ',')) {
        if (part.empty()) continue;
        auto eq = part.find('=');
        if (eq == std::string::npos) throw DomainError("bad intervention token '" + part + "'");
        iv.set(g.id_of(part.substr(0, eq)), std::stoi(part.substr(eq + 1)));
    }
    return iv;
}

namespace {

bool sums_to_one(const std::vector<double>& dist) {
    double s = 0;
    for (double p : dist) {
        if (p < 0) return false;
        s += p;
    }
    return std::abs(s - 1.0) <= 1e-12;
}

size_t table_size_for(const ScmSpec& spec, VarId v, const std::vector<int>& conf_index) {
    size_t size = 1;
    for (VarId p : spec.graph.parents_mask(v).to_vector()) size *= spec.domain[p];
    size *= spec.noise[v].size();
    for (int ci : conf_index) size *= spec.confounders[ci].dist.size();
    return size;
}

std::vector<int> incident_confounders(const ScmSpec& spec, VarId v) {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(spec.confounders.size()); ++i) {
        if (spec.confounders[i].a == v || spec.confounders[i].b == v) out.push_back(i);
    }
    return out;
}

} // namespace

ValidationReport validate(const ScmSpec& spec) {
    ValidationReport rep;
    const int n = spec.graph.size();
    auto err = [&rep](const std::string& m) { rep.errors.push_back(m); };

    if (static_cast<int>(spec.domain.size()) != n) err("domain list length differs from vertex count");
    if (static_cast<int>(spec.noise.size()) != n) err("noise list length differs from vertex count");
    if (static_cast<int>(spec.mech.size()) != n) err("mechanism list length differs from vertex count");
    if (!rep.ok()) return rep;

    for (int v = 0; v < n; ++v) {
        if (spec.domain[v] < 2) err("domain of " + spec.graph.name(v) + " must be at least 2");
    }
    if (spec.domain[spec.graph.reward()] != 2) {
        err("reward " + spec.graph.name(spec.graph.reward()) + " must be binary");
    }
    for (int v = 0; v < n; ++v) {
        if (spec.noise[v].empty()) {
            err("noise table of " + spec.graph.name(v) + " is empty");
        } else if (!sums_to_one(spec.noise[v])) {
            err("noise table of " + spec.graph.name(v) + " is not a distribution");
        }
    }

    // Confounders must match the bidirected edges one to one.
    auto edges = spec.graph.bidirected_edges();
    std::vector<std::pair<VarId, VarId>> declared;
    for (const auto& c : spec.confounders) {
        if (c.a >= c.b) {
            err("confounder endpoints must be stored as (min,max)");
            continue;
        }
        declared.emplace_back(c.a, c.b);
        if (!sums_to_one(c.dist) || c.dist.empty()) {
            err("confounder table " + spec.graph.name(c.a) + "--" + spec.graph.name(c.b) +
                " is not a distribution");
        }
    }
    std::sort(declared.begin(), declared.end());
    if (declared != edges) err("confounder list does not match the graph's bidirected edges");
    if (!rep.ok()) return rep;

    for (int v = 0; v < n; ++v) {
        auto conf_index = incident_confounders(spec, v);
        size_t want = table_size_for(spec, v, conf_index);
        if (spec.mech[v].table.size() != want) {
            err("mechanism table of " + spec.graph.name(v) + " has " +
                std::to_string(spec.mech[v].table.size()) + " rows, expected " + std::to_string(want));
            continue;
        }
        for (int val : spec.mech[v].table) {
            if (val < 0 || val >= spec.domain[v]) {
                err("mechanism of " + spec.graph.name(v) + " outputs an out-of-domain value");
                break;
            }
        }

        // Unused-input warnings: an input is used when some pair of rows that
        // differ only in that input maps to different outputs.
        std::vector<int> dims;
        for (VarId p : spec.graph.parents_mask(v).to_vector()) dims.push_back(spec.domain[p]);
        dims.push_back(static_cast<int>(spec.noise[v].size()));
        for (int ci : conf_index) dims.push_back(static_cast<int>(spec.confounders[ci].dist.size()));
        std::vector<std::string> labels;
        for (VarId p : spec.graph.parents_mask(v).to_vector()) labels.push_back("parent " + spec.graph.name(p));
        labels.push_back("noise");
        for (int ci : conf_index) {
            labels.push_back("confounder " + spec.graph.name(spec.confounders[ci].a) + "--" +
                             spec.graph.name(spec.confounders[ci].b));
        }
        size_t total = spec.mech[v].table.size();
        for (size_t d = 0; d < dims.size(); ++d) {
            size_t inner = 1;
            for (size_t e = d + 1; e < dims.size(); ++e) inner *= dims[e];
            bool used = false;
            for (size_t row = 0; row < total && !used; ++row) {
                size_t digit = (row / inner) % dims[d];
                if (digit + 1 < static_cast<size_t>(dims[d])) {
                    used = spec.mech[v].table[row] != spec.mech[v].table[row + inner];
                }
            }
            if (!used && dims[d] > 1) {
                rep.warnings.push_back("mechanism of " + spec.graph.name(v) + " ignores its " + labels[d]);
            }
        }
    }
    return rep;
}

JointDistribution::JointDistribution(std::vector<int> domains, VarId reward)
    : domains_(std::move(domains)), reward_(reward) {
    strides_.assign(domains_.size(), 1);
    uint64_t s = 1;
    for (int v = static_cast<int>(domains_.size()) - 1; v >= 0; --v) {
        strides_[v] = s;
        s *= domains_[v];
    }
}

void JointDistribution::add(const std::vector<uint8_t>& assignment, double p) {
    uint64_t code = 0;
    for (size_t v = 0; v < domains_.size(); ++v) code += strides_[v] * assignment[v];
    p_[code] += p;
}

double JointDistribution::prob_of(VarId var, int val) const {
    double s = 0;
    for (const auto& [code, p] : p_) {
        if (static_cast<int>(code / strides_[var] % domains_[var]) == val) s += p;
    }
    return s;
}

double JointDistribution::prob_pair(VarId v1, int x1, VarId v2, int x2) const {
    double s = 0;
    for (const auto& [code, p] : p_) {
        if (static_cast<int>(code / strides_[v1] % domains_[v1]) == x1 &&
            static_cast<int>(code / strides_[v2] % domains_[v2]) == x2) {
            s += p;
        }
    }
    return s;
}

double JointDistribution::conditional(VarId tvar, int tval, VarId gvar, int gval) const {
    double denom = prob_of(gvar, gval);
    if (denom <= 0) return 0.0;
    return prob_pair(tvar, tval, gvar, gval) / denom;
}

double JointDistribution::total() const {
    double s = 0;
    for (const auto& [code, p] : p_) s += p;
    return s;
}

std::vector<uint8_t> JointDistribution::decode(uint64_t code) const {
    std::vector<uint8_t> out(domains_.size());
    for (size_t v = 0; v < domains_.size(); ++v) {
        out[v] = static_cast<uint8_t>(code / strides_[v] % domains_[v]);
    }
    return out;
}

Scm::Scm(ScmSpec spec) : spec_(std::move(spec)) {
    ValidationReport rep = validate(spec_);
    if (!rep.ok()) {
        std::string msg = "invalid SCM:";
        for (const auto& e : rep.errors) msg += "\n  " + e;
        throw DomainError(msg);
    }
    const int n = spec_.graph.size();
    // topological order by repeated source removal on parent masks
    std::vector<uint64_t> pa(n);
    for (int v = 0; v < n; ++v) pa[v] = spec_.graph.parents_mask(v).bits();
    uint64_t placed = 0;
    topo_.reserve(n);
    while (static_cast<int>(topo_.size()) < n) {
        for (int v = 0; v < n; ++v) {
            if ((placed >> v) & 1ULL) continue;
            if ((pa[v] & ~placed) == 0) {
                topo_.push_back(v);
                placed |= 1ULL << v;
            }
        }
    }
    plan_.resize(n);
    for (int v = 0; v < n; ++v) {
        plan_[v].parents = spec_.graph.parents_mask(v).to_vector();
        plan_[v].conf_index = incident_confounders(spec_, v);
        plan_[v].table = spec_.mech[v].table.data();
        plan_[v].noise_dom = static_cast<int>(spec_.noise[v].size());
    }
}

void Scm::check_intervention(const Intervention& iv) const {
    for (const auto& [var, val] : iv.assignments()) {
        spec_.graph.check_vertex(var);
        if (var == spec_.graph.reward()) {
            throw DomainError("the reward variable cannot be intervened on");
        }
        if (val < 0 || val >= spec_.domain[var]) {
            throw DomainError("intervention value " + std::to_string(val) + " out of domain for " +
                              spec_.graph.name(var));
        }
    }
}

int Scm::eval_mechanism(VarId v, const uint8_t* values, const std::vector<uint8_t>& noise_vals,
                        const std::vector<uint8_t>& conf_vals) const {
    const Node& node = plan_[v];
    size_t idx = 0;
    for (VarId p : node.parents) idx = idx * spec_.domain[p] + values[p];
    idx = idx * node.noise_dom + noise_vals[v];
    for (int ci : node.conf_index) {
        idx = idx * spec_.confounders[ci].dist.size() + conf_vals[ci];
    }
    return node.table[idx];
}

namespace {

inline uint8_t draw_discrete(const std::vector<double>& dist, Rng& rng) {
    double u = rng.uniform();
    double acc = 0;
    for (size_t i = 0; i + 1 < dist.size(); ++i) {
        acc += dist[i];
        if (u < acc) return static_cast<uint8_t>(i);
    }
    return static_cast<uint8_t>(dist.size() - 1);
}

} // namespace

void Scm::draw_into(const Intervention& iv, long long count, Rng& rng, std::vector<uint8_t>& out) const {
    check_intervention(iv);
    const int n = var_count();
    const size_t nc = spec_.confounders.size();
    std::vector<uint8_t> noise_vals(n);
    std::vector<uint8_t> conf_vals(nc);
    std::vector<int8_t> forced(n, -1);
    for (const auto& [var, val] : iv.assignments()) forced[var] = static_cast<int8_t>(val);
    size_t base = out.size();
    out.resize(base + static_cast<size_t>(count) * n);
    uint8_t* row = out.data() + base;
    for (long long s = 0; s < count; ++s, row += n) {
        for (int v = 0; v < n; ++v) noise_vals[v] = draw_discrete(spec_.noise[v], rng);
        for (size_t c = 0; c < nc; ++c) conf_vals[c] = draw_discrete(spec_.confounders[c].dist, rng);
        for (int v : topo_) {
            row[v] = forced[v] >= 0 ? static_cast<uint8_t>(forced[v])
                                    : static_cast<uint8_t>(eval_mechanism(v, row, noise_vals, conf_vals));
        }
    }
}

std::vector<Sample> Scm::draw(const Intervention& iv, long long count, Rng& rng) const {
    std::vector<uint8_t> buf;
    draw_into(iv, count, rng, buf);
    std::vector<Sample> out(count);
    const int n = var_count();
    for (long long s = 0; s < count; ++s) {
        out[s].values.assign(buf.begin() + s * n, buf.begin() + (s + 1) * n);
    }
    return out;
}

JointDistribution Scm::exact_distribution(const Intervention& iv, uint64_t exo_guard) const {
    check_intervention(iv);
    const int n = var_count();
    const size_t nc = spec_.confounders.size();

    std::vector<int8_t> forced(n, -1);
    for (const auto& [var, val] : iv.assignments()) forced[var] = static_cast<int8_t>(val);

    // Exogenous variables that cannot reach any free observed variable are
    // skipped: the noise of an intervened variable, and confounders whose
    // endpoints are both intervened. Their marginal sums to one.
    std::vector<bool> noise_live(n), conf_live(nc);
    double configs = 1;
    for (int v = 0; v < n; ++v) {
        noise_live[v] = forced[v] < 0 && spec_.noise[v].size() > 1;
        if (noise_live[v]) configs *= static_cast<double>(spec_.noise[v].size());
    }
    for (size_t c = 0; c < nc; ++c) {
        conf_live[c] = (forced[spec_.confounders[c].a] < 0 || forced[spec_.confounders[c].b] < 0) &&
                       spec_.confounders[c].dist.size() > 1;
        if (conf_live[c]) configs *= static_cast<double>(spec_.confounders[c].dist.size());
    }
    if (configs > static_cast<double>(exo_guard)) {
        throw CapacityError("exact enumeration over " + std::to_string(configs) +
                            " exogenous configurations exceeds the guard");
    }

    JointDistribution joint(spec_.domain, spec_.graph.reward());
    std::vector<uint8_t> noise_vals(n, 0);
    std::vector<uint8_t> conf_vals(nc, 0);
    std::vector<uint8_t> values(n, 0);

    for (;;) {
        double p = 1;
        for (int v = 0; v < n; ++v) {
            if (noise_live[v]) p *= spec_.noise[v][noise_vals[v]];
        }
        for (size_t c = 0; c < nc; ++c) {
            if (conf_live[c]) p *= spec_.confounders[c].dist[conf_vals[c]];
        }
        if (p > 0) {
            for (int v : topo_) {
                values[v] = forced[v] >= 0
                                ? static_cast<uint8_t>(forced[v])
                                : static_cast<uint8_t>(eval_mechanism(v, values.data(), noise_vals, conf_vals));
            }
            joint.add(values, p);
        }
        // odometer over the live noise values then live confounder values
        int pos = 0;
        for (; pos < n; ++pos) {
            if (!noise_live[pos]) continue;
            if (++noise_vals[pos] < spec_.noise[pos].size()) break;
            noise_vals[pos] = 0;
        }
        if (pos < n) continue;
        size_t cpos = 0;
        for (; cpos < nc; ++cpos) {
            if (!conf_live[cpos]) continue;
            if (++conf_vals[cpos] < spec_.confounders[cpos].dist.size()) break;
            conf_vals[cpos] = 0;
        }
        if (cpos == nc) break;
    }
    return joint;
}

double Scm::exact_prob(VarId var, int val, const Intervention& iv) const {
    return exact_distribution(iv).prob_of(var, val);
}

double Scm::exact_conditional(VarId tvar, int tval, VarId gvar, int gval, const Intervention& iv) const {
    JointDistribution joint = exact_distribution(iv);
    double denom = joint.prob_of(gvar, gval);
    if (denom <= 0) {
        throw DomainError("conditioning event " + spec_.graph.name(gvar) + "=" + std::to_string(gval) +
                          " has zero probability");
    }
    return joint.prob_pair(tvar, tval, gvar, gval) / denom;
}

double Scm::expected_reward(const Intervention& iv) const {
    return exact_prob(spec_.graph.reward(), 1, iv);
}

std::pair<double, Intervention> Scm::oracle_optimum(int pomis_guard) const {
    PomisFamily family = enumerate_pomis(spec_.graph, pomis_guard);
    double best = -1;
    Intervention best_iv;
    for (VertexSet member : family) {
        std::vector<VarId> vars = member.to_vector();
        std::vector<int> vals(vars.size(), 0);
        for (;;) {
            Intervention iv;
            for (size_t i = 0; i < vars.size(); ++i) iv.set(vars[i], vals[i]);
            double mu = expected_reward(iv);
            if (mu > best) {
                best = mu;
                best_iv = iv;
            }
            int pos = static_cast<int>(vars.size()) - 1;
            for (; pos >= 0; --pos) {
                if (++vals[pos] < spec_.domain[vars[pos]]) break;
                vals[pos] = 0;
            }
            if (pos < 0) break;
        }
    }
    return {best, best_iv};
}

// ---------------------------------------------------------------------------
// Random gapped instances

namespace {

struct GapCheck {
    bool ok = true;
    std::string reason;
    VarId node = -1;  // the node whose mechanism to resample on failure
    VarId node2 = -1; // secondary candidate when repairing node alone stalls
};

// Verifies the testable gap quantities on every intervention target set
// W not containing the reward, at the all-zeros realization.
GapCheck verify_gaps(const Scm& scm, const GapParams& gaps) {
    const Admg& g = scm.graph();
    const int n = g.size();
    const VarId y = g.reward();

    std::vector<VarId> others;
    for (int v = 0; v < n; ++v) {
        if (v != y) others.push_back(v);
    }
    const int m = static_cast<int>(others.size());

    for (uint64_t wm = 0; wm < (1ULL << m); ++wm) {
        Intervention base_iv;
        VertexSet w;
        for (int i = 0; i < m; ++i) {
            if ((wm >> i) & 1ULL) {
                w.insert(others[i]);
                base_iv.set(others[i], 0);
            }
        }
        JointDistribution base = scm.exact_distribution(base_iv);
        Admg cut = do_graph(g, w);

        // eta floor on the quantities a conditional estimate can hit
        for (int v = 0; v < n; ++v) {
            if (w.contains(v)) continue;
            for (int val = 0; val < scm.domain(v); ++val) {
                double p = base.prob_of(v, val);
                if (p > 1e-12 && p < gaps.eta) {
                    return {false,
                            "eta floor violated at P(" + g.name(v) + "=" + std::to_string(val) + "|" +
                                base_iv.key(g) + ")",
                            v};
                }
            }
        }

        // single-target overrides of this base
        std::vector<std::vector<JointDistribution>> over(n);
        for (VarId u : others) {
            if (w.contains(u)) continue;
            over[u].reserve(scm.domain(u));
            for (int xu = 0; xu < scm.domain(u); ++xu) {
                over[u].push_back(scm.exact_distribution(base_iv.with(u, xu)));
            }
        }

        // ancestrality gaps under this W
        for (VarId u : others) {
            if (w.contains(u)) continue;
            for (int v = 0; v < n; ++v) {
                if (v == u || w.contains(v)) continue;
                if (!ancestors(cut, v).contains(u)) continue;
                double gap = 0;
                for (int xu = 0; xu < scm.domain(u); ++xu) {
                    for (int xv = 0; xv < scm.domain(v); ++xv) {
                        gap = std::max(gap, std::abs(over[u][xu].prob_of(v, xv) - base.prob_of(v, xv)));
                    }
                }
                if (gap <= gaps.epsilon) {
                    return {false,
                            "epsilon ancestrality gap " + std::to_string(gap) + " for " + g.name(u) +
                                " -> " + g.name(v) + " under " + base_iv.key(g),
                            v, u};
                }
            }
        }

        // latent gaps for pairs whose parent cover fits inside this W
        for (VarId xi : others) {
            if (w.contains(xi)) continue;
            for (int xj = 0; xj < n; ++xj) {
                if (xj == xi || w.contains(xj)) continue;
                if (!g.has_bidirected(xi, xj)) continue;
                if (ancestors(g, xi).contains(xj)) continue; // test runs with the pair flipped
                VertexSet required = (g.parents_mask(xi) | g.parents_mask(xj)).minus(VertexSet({xi}));
                if (!required.subset_of(w)) continue;
                double gap = 0;
                for (int a = 0; a < scm.domain(xi); ++a) {
                    for (int b = 0; b < scm.domain(xj); ++b) {
                        double lhs = over[xi][a].prob_of(xj, b);
                        double rhs = base.conditional(xj, b, xi, a);
                        gap = std::max(gap, std::abs(lhs - rhs));
                    }
                }
                if (gap <= gaps.gamma) {
                    return {false,
                            "gamma latent gap " + std::to_string(gap) + " for " + g.name(xi) + " -- " +
                                g.name(xj) + " under " + base_iv.key(g),
                            xj, xi};
                }
            }
        }
    }
    return {true, ""};
}

bool every_input_used(const std::vector<int>& table, const std::vector<int>& dims) {
    size_t total = table.size();
    for (size_t d = 0; d < dims.size(); ++d) {
        if (dims[d] < 2) continue;
        size_t inner = 1;
        for (size_t e = d + 1; e < dims.size(); ++e) inner *= dims[e];
        bool used = false;
        for (size_t row = 0; row < total && !used; ++row) {
            size_t digit = (row / inner) % dims[d];
            if (digit + 1 < static_cast<size_t>(dims[d])) used = table[row] != table[row + inner];
        }
        if (!used) return false;
    }
    return true;
}

// Random monotone threshold table: output counts how many cutpoints the
// weighted input sum clears. Monotone mechanisms keep single-input effects
// from cancelling across contexts, which is what the gap assumptions need;
// plain uniform random tables almost never survive the verifier on graphs
// with more than a couple of parents. Cutpoints are calibrated against the
// (approximate, independence-assuming) distribution of the input sum so the
// node's marginal stays well inside the eta floor.
std::vector<int> random_threshold_table(const std::vector<int>& dims, int parent_count,
                                        const std::vector<const std::vector<double>*>& marginals,
                                        int out_dom, Rng& rng, std::vector<double>* out_marginal) {
    size_t total = 1;
    for (int d : dims) total *= d;
    std::vector<int> table(total);
    std::vector<int> weights(dims.size());
    for (int attempt = 0; attempt < 64; ++attempt) {
        int max_raw = 0;
        for (size_t d = 0; d < dims.size(); ++d) {
            // Parent and confounder inputs get heavier weights than the own
            // noise, so a single input flip moves the output through the cut
            // band often enough for the gap assumptions.
            weights[d] = static_cast<int>(d) == parent_count ? 1 : 3;
            max_raw += weights[d] * (dims[d] - 1);
        }
        // pmf of the weighted input sum under the estimated marginals, and
        // the same with all parents forced to zero (the realization every
        // base dataset fixes).
        std::vector<double> pmf(max_raw + 1, 0.0), pmf0(max_raw + 1, 0.0);
        pmf[0] = pmf0[0] = 1.0;
        int reach = 0, reach0 = 0;
        for (size_t d = 0; d < dims.size(); ++d) {
            std::vector<double> next(max_raw + 1, 0.0);
            for (int r = 0; r <= reach; ++r) {
                if (pmf[r] == 0) continue;
                for (int x = 0; x < dims[d]; ++x) {
                    next[r + weights[d] * x] += pmf[r] * (*marginals[d])[x];
                }
            }
            reach += weights[d] * (dims[d] - 1);
            pmf.swap(next);
            if (static_cast<int>(d) >= parent_count) {
                std::vector<double> next0(max_raw + 1, 0.0);
                for (int r = 0; r <= reach0; ++r) {
                    if (pmf0[r] == 0) continue;
                    for (int x = 0; x < dims[d]; ++x) {
                        next0[r + weights[d] * x] += pmf0[r] * (*marginals[d])[x];
                    }
                }
                reach0 += weights[d] * (dims[d] - 1);
                pmf0.swap(next0);
            }
        }
        std::vector<double> tail(max_raw + 2, 0.0), tail0(max_raw + 2, 0.0);
        for (int t = max_raw; t >= 0; --t) {
            tail[t] = tail[t + 1] + pmf[t];
            tail0[t] = tail0[t + 1] + pmf0[t];
        }

        // One cut per output level: evenly spread tail mass observationally,
        // while the parents-forced-to-zero regime stays clear of the eta
        // danger band (0, 0.25) on either side.
        auto zero_regime_ok = [&](int t) {
            double p = tail0[t];
            return p <= 1e-12 || p >= 1.0 - 1e-12 || (p >= 0.25 && p <= 0.75);
        };
        const double slack = 0.12 + 0.12 * rng.uniform();
        std::vector<int> cuts(out_dom - 1);
        bool cuts_ok = true;
        int prev = 0;
        for (int i = 0; i < out_dom - 1; ++i) {
            double target = 1.0 - static_cast<double>(i + 1) / out_dom;
            std::vector<int> candidates;
            for (int t = prev + 1; t <= max_raw; ++t) {
                if (std::abs(tail[t] - target) <= slack && zero_regime_ok(t)) candidates.push_back(t);
            }
            if (candidates.empty()) {
                for (int t = prev + 1; t <= max_raw; ++t) {
                    if (std::abs(tail[t] - target) <= slack) candidates.push_back(t);
                }
            }
            int cut;
            if (!candidates.empty()) {
                cut = candidates[rng.uniform_below(candidates.size())];
            } else {
                cut = prev + 1;
                for (int t = prev + 1; t <= max_raw; ++t) {
                    if (std::abs(tail[t] - target) < std::abs(tail[cut] - target)) cut = t;
                }
            }
            if (cut > max_raw) cuts_ok = false;
            cuts[i] = cut;
            prev = cut;
        }
        if (!cuts_ok) continue;

        for (size_t row = 0; row < total; ++row) {
            size_t rest = row;
            int raw = 0;
            for (int d = static_cast<int>(dims.size()) - 1; d >= 0; --d) {
                raw += weights[d] * static_cast<int>(rest % dims[d]);
                rest /= dims[d];
            }
            int val = 0;
            for (int c : cuts) val += raw >= c ? 1 : 0;
            table[row] = val;
        }
        if (every_input_used(table, dims)) {
            if (out_marginal) {
                out_marginal->assign(out_dom, 0.0);
                for (int t = 0; t <= max_raw; ++t) {
                    int val = 0;
                    for (int c : cuts) val += t >= c ? 1 : 0;
                    (*out_marginal)[val] += pmf[t];
                }
            }
            return table;
        }
    }
    if (out_marginal) out_marginal->assign(out_dom, 1.0 / out_dom);
    return table; // relevance not achieved; the gap verifier will reject
}

} // namespace

Scm random_scm(const Admg& g, const GapParams& gaps, uint64_t seed) {
    if (g.size() > gaps.verify_max_n) {
        throw CapacityError("random_scm gap verification is exhaustive in the intervention sets; " +
                            std::to_string(g.size()) + " vertices exceed the guard of " +
                            std::to_string(gaps.verify_max_n));
    }
    Rng rng(seed);
    const int n = g.size();

    ScmSpec spec{g, {}, {}, {}, {}};
    spec.domain.assign(n, gaps.k);
    spec.domain[g.reward()] = 2;
    spec.noise.resize(n);
    spec.mech.resize(n);
    std::vector<std::vector<double>> marginal(n); // approximate observational marginals

    auto resample_node = [&](VarId v) {
        double p1 = 0.25 + 0.5 * rng.uniform();
        spec.noise[v] = {1.0 - p1, p1};
        std::vector<int> dims;
        std::vector<const std::vector<double>*> margs;
        for (VarId p : g.parents_mask(v).to_vector()) {
            dims.push_back(spec.domain[p]);
            margs.push_back(&marginal[p]);
        }
        int parent_count = static_cast<int>(dims.size());
        dims.push_back(2);
        margs.push_back(&spec.noise[v]);
        for (const auto& c : spec.confounders) {
            if (c.a == v || c.b == v) {
                dims.push_back(static_cast<int>(c.dist.size()));
                margs.push_back(&c.dist);
            }
        }
        spec.mech[v].table =
            random_threshold_table(dims, parent_count, margs, spec.domain[v], rng, &marginal[v]);
    };

    // topological order so parent marginal estimates exist before use
    std::vector<int> order;
    {
        uint64_t placed = 0;
        while (static_cast<int>(order.size()) < n) {
            for (int v = 0; v < n; ++v) {
                if ((placed >> v) & 1ULL) continue;
                if ((g.parents_mask(v).bits() & ~placed) == 0) {
                    order.push_back(v);
                    placed |= 1ULL << v;
                }
            }
        }
    }

    auto rebuild_all = [&] {
        spec.confounders.clear();
        for (auto [a, b] : g.bidirected_edges()) {
            double p1 = 0.25 + 0.5 * rng.uniform();
            spec.confounders.push_back({a, b, {1.0 - p1, p1}});
        }
        for (int v : order) resample_node(v);
    };

    rebuild_all();
    std::string last_reason = "no attempt made";
    int repairs = 0;
    int streak = 0;
    for (int attempt = 0; attempt < gaps.max_retries; ++attempt) {
        Scm scm(spec);
        GapCheck check = verify_gaps(scm, gaps);
        if (check.ok) return scm;
        streak = check.reason == last_reason ? streak + 1 : 0;
        last_reason = check.reason;
        // Local repair: resample only the offending node's mechanism and
        // noise; on a repeated violation also resample the other endpoint;
        // restart from scratch when repairs stop converging.
        if (check.node >= 0 && repairs < 60 && streak < 3) {
            resample_node(check.node);
            if (streak > 0 && check.node2 >= 0) resample_node(check.node2);
            ++repairs;
        } else {
            rebuild_all();
            repairs = 0;
            streak = 0;
        }
    }
    throw GenerationError("random_scm exhausted " + std::to_string(gaps.max_retries) +
                          " retries; last violation: " + last_reason);
}

} // namespace cbandit
