#include "graph.hpp"

#include <algorithm>

namespace cbandit {

bool vertex_set_less(VertexSet a, VertexSet b) {
    if (a.size() != b.size()) return a.size() < b.size();
    uint64_t x = a.bits();
    uint64_t y = b.bits();
    while (x && y) {
        int i = __builtin_ctzll(x);
        int j = __builtin_ctzll(y);
        if (i != j) return i < j;
        x &= x - 1;
        y &= y - 1;
    }
    return false; // equal
}

Admg::Admg(std::vector<std::string> names, VarId reward)
    : n_(static_cast<int>(names.size())),
      reward_(reward),
      names_(std::move(names)),
      pa_(n_, 0),
      ch_(n_, 0),
      sib_(n_, 0) {
    if (n_ == 0) throw DomainError("graph needs at least one vertex");
    if (n_ > VertexSet::kMaxVertices) {
        throw CapacityError("graph exceeds " + std::to_string(VertexSet::kMaxVertices) + " vertices");
    }
    check_vertex(reward_);
    for (int i = 0; i < n_; ++i) {
        for (int j = i + 1; j < n_; ++j) {
            if (names_[i] == names_[j]) {
                throw DomainError("duplicate vertex name '" + names_[i] + "'");
            }
        }
    }
}

Admg Admg::with_reward_last(int n) {
    std::vector<std::string> names;
    names.reserve(n);
    for (int i = 0; i + 1 < n; ++i) names.push_back("V" + std::to_string(i + 1));
    names.push_back("Y");
    return Admg(std::move(names), n - 1);
}

VarId Admg::id_of(const std::string& name) const {
    for (int i = 0; i < n_; ++i) {
        if (names_[i] == name) return i;
    }
    throw DomainError("unknown vertex name '" + name + "'");
}

void Admg::add_edge(VarId tail, VarId head) {
    check_vertex(tail);
    check_vertex(head);
    if (tail == head) throw DomainError("self-loop on " + names_[tail]);
    if (has_edge(tail, head)) return;
    // Reject the edge if head already reaches tail.
    if (tail != head && descendants(*this, head).contains(tail)) {
        throw DomainError("edge " + names_[tail] + " -> " + names_[head] + " creates a directed cycle");
    }
    ch_[tail] |= 1ULL << head;
    pa_[head] |= 1ULL << tail;
}

void Admg::add_bidirected(VarId a, VarId b) {
    check_vertex(a);
    check_vertex(b);
    if (a == b) throw DomainError("bidirected self-loop on " + names_[a]);
    sib_[a] |= 1ULL << b;
    sib_[b] |= 1ULL << a;
}

void Admg::remove_bidirected(VarId a, VarId b) {
    check_vertex(a);
    check_vertex(b);
    sib_[a] &= ~(1ULL << b);
    sib_[b] &= ~(1ULL << a);
}

VertexSet Admg::parents_of_set(VertexSet s) const {
    uint64_t out = 0;
    for (VarId v : s.to_vector()) out |= pa_[v];
    return VertexSet(out);
}

std::vector<std::pair<VarId, VarId>> Admg::directed_edges() const {
    std::vector<std::pair<VarId, VarId>> out;
    for (int t = 0; t < n_; ++t) {
        for (VarId h : VertexSet(ch_[t]).to_vector()) out.emplace_back(t, h);
    }
    return out;
}

std::vector<std::pair<VarId, VarId>> Admg::bidirected_edges() const {
    std::vector<std::pair<VarId, VarId>> out;
    for (int a = 0; a < n_; ++a) {
        for (VarId b : VertexSet(sib_[a]).to_vector()) {
            if (a < b) out.emplace_back(a, b);
        }
    }
    return out;
}

VertexSet descendants(const Admg& g, VarId v) {
    g.check_vertex(v);
    uint64_t seen = 0;
    uint64_t frontier = g.children_mask(v).bits();
    while (frontier) {
        seen |= frontier;
        uint64_t next = 0;
        uint64_t f = frontier;
        while (f) {
            int u = __builtin_ctzll(f);
            f &= f - 1;
            next |= g.children_mask(u).bits();
        }
        frontier = next & ~seen;
    }
    seen &= ~(1ULL << v); // v not a descendant of itself even through a (impossible) cycle
    return VertexSet(seen);
}

VertexSet ancestors(const Admg& g, VarId v) {
    g.check_vertex(v);
    uint64_t seen = 0;
    uint64_t frontier = g.parents_mask(v).bits();
    while (frontier) {
        seen |= frontier;
        uint64_t next = 0;
        uint64_t f = frontier;
        while (f) {
            int u = __builtin_ctzll(f);
            f &= f - 1;
            next |= g.parents_mask(u).bits();
        }
        frontier = next & ~seen;
    }
    seen &= ~(1ULL << v);
    return VertexSet(seen);
}

VertexSet relation_query(const Admg& g, VarId v, Relation kind) {
    switch (kind) {
        case Relation::parents: return g.parents_mask(v);
        case Relation::children: return g.children_mask(v);
        case Relation::ancestors: return ancestors(g, v);
        case Relation::descendants: return descendants(g, v);
    }
    throw DomainError("bad relation kind");
}

Admg transitive_closure(const Admg& g) {
    Admg out(g.names(), g.reward());
    for (int v = 0; v < g.size(); ++v) {
        for (VarId a : ancestors(g, v).to_vector()) out.add_edge(a, v);
        for (VarId s : g.siblings_mask(v).to_vector()) {
            if (v < s) out.add_bidirected(v, s);
        }
    }
    return out;
}

Admg transitive_reduction(const Admg& g) {
    // (u,v) is redundant iff some other child w of u still reaches v.
    const int n = g.size();
    std::vector<uint64_t> reach(n); // strict descendants
    for (int v = 0; v < n; ++v) reach[v] = descendants(g, v).bits();
    Admg out(g.names(), g.reward());
    for (int u = 0; u < n; ++u) {
        for (VarId v : g.children_mask(u).to_vector()) {
            bool redundant = false;
            for (VarId w : g.children_mask(u).to_vector()) {
                if (w != v && ((reach[w] >> v) & 1ULL)) {
                    redundant = true;
                    break;
                }
            }
            if (!redundant) out.add_edge(u, v);
        }
    }
    for (auto [a, b] : g.bidirected_edges()) out.add_bidirected(a, b);
    return out;
}

Admg do_graph(const Admg& g, VertexSet w) {
    if (!w.subset_of(g.vertices())) throw DomainError("intervention set contains unknown vertices");
    Admg out(g.names(), g.reward());
    for (auto [t, h] : g.directed_edges()) {
        if (!w.contains(h)) out.add_edge(t, h);
    }
    for (auto [a, b] : g.bidirected_edges()) {
        if (!w.contains(a) && !w.contains(b)) out.add_bidirected(a, b);
    }
    return out;
}

VertexSet c_component(const Admg& g, VarId v) {
    g.check_vertex(v);
    uint64_t seen = 1ULL << v;
    uint64_t frontier = seen;
    while (frontier) {
        uint64_t next = 0;
        uint64_t f = frontier;
        while (f) {
            int u = __builtin_ctzll(f);
            f &= f - 1;
            next |= g.siblings_mask(u).bits();
        }
        frontier = next & ~seen;
        seen |= next;
    }
    return VertexSet(seen);
}

VertexSet c_component_of_set(const Admg& g, VertexSet s) {
    uint64_t out = 0;
    for (VarId v : s.to_vector()) out |= c_component(g, v).bits();
    return VertexSet(out);
}

namespace {

// Restriction of g to the vertex set h: masks intersected with h.
struct InducedView {
    const Admg* g;
    uint64_t h;
    uint64_t kids(int v) const { return g->children_mask(v).bits() & h; }
    uint64_t sibs(int v) const { return g->siblings_mask(v).bits() & h; }
};

uint64_t descendants_within(const InducedView& view, uint64_t from) {
    uint64_t seen = from;
    uint64_t frontier = from;
    while (frontier) {
        uint64_t next = 0;
        uint64_t f = frontier;
        while (f) {
            int u = __builtin_ctzll(f);
            f &= f - 1;
            next |= view.kids(u);
        }
        frontier = next & ~seen;
        seen |= next;
    }
    return seen;
}

uint64_t cc_within(const InducedView& view, uint64_t from) {
    uint64_t seen = from;
    uint64_t frontier = from;
    while (frontier) {
        uint64_t next = 0;
        uint64_t f = frontier;
        while (f) {
            int u = __builtin_ctzll(f);
            f &= f - 1;
            next |= view.sibs(u);
        }
        frontier = next & ~seen;
        seen |= next;
    }
    return seen;
}

} // namespace

VertexSet muct(const Admg& g, VarId y) {
    g.check_vertex(y);
    const uint64_t h = ancestors(g, y).bits() | (1ULL << y);
    InducedView view{&g, h};
    uint64_t t = 1ULL << y;
    for (;;) {
        uint64_t grown = descendants_within(view, cc_within(view, t));
        if (grown == t) return VertexSet(t);
        t = grown;
    }
}

VertexSet interventional_border(const Admg& g, VarId y) {
    VertexSet t = muct(g, y);
    return g.parents_of_set(t).minus(t);
}

void PomisFamily::insert(VertexSet s) {
    auto it = std::lower_bound(members_.begin(), members_.end(), s, vertex_set_less);
    if (it != members_.end() && *it == s) return;
    members_.insert(it, s);
}

bool PomisFamily::contains(VertexSet s) const {
    auto it = std::lower_bound(members_.begin(), members_.end(), s, vertex_set_less);
    return it != members_.end() && *it == s;
}

PomisFamily enumerate_pomis(const Admg& g, int max_vertices) {
    return enumerate_pomis_within(g, g.vertices(), max_vertices);
}

PomisFamily enumerate_pomis_within(const Admg& g, VertexSet candidates, int max_vertices) {
    if (candidates.size() > max_vertices) {
        throw CapacityError("enumerate_pomis over " + std::to_string(candidates.size()) +
                            " candidate vertices exceeds the guard of " + std::to_string(max_vertices));
    }
    const VarId y = g.reward();
    candidates.erase(y);
    const std::vector<VarId> pool = candidates.to_vector();
    const uint64_t count = 1ULL << pool.size();
    PomisFamily family;
    for (uint64_t m = 0; m < count; ++m) {
        VertexSet w;
        for (size_t i = 0; i < pool.size(); ++i) {
            if ((m >> i) & 1ULL) w.insert(pool[i]);
        }
        family.insert(interventional_border(do_graph(g, w), y));
    }
    return family;
}

std::string to_string(const Admg& g, VertexSet s) {
    std::string out = "{";
    bool first = true;
    for (VarId v : s.to_vector()) {
        if (!first) out += ",";
        out += g.name(v);
        first = false;
    }
    out += "}";
    return out;
}

} // namespace cbandit
