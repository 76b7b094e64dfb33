#ifndef CBANDIT_GRAPH_HPP
#define CBANDIT_GRAPH_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace cbandit {

// Dense vertex index within one graph.
using VarId = int;

// A set of vertices of one graph, stored as a bitmask. Graphs are capped at
// kMaxVertices vertices, which is far beyond the scale any of the exhaustive
// algorithms here can handle anyway.
class VertexSet {
public:
    static constexpr int kMaxVertices = 64;

    VertexSet() = default;
    explicit VertexSet(uint64_t bits) : bits_(bits) {}
    VertexSet(std::initializer_list<VarId> vs) {
        for (VarId v : vs) insert(v);
    }

    static VertexSet full(int n) {
        return n >= 64 ? VertexSet(~0ULL) : VertexSet((1ULL << n) - 1);
    }

    bool contains(VarId v) const { return (bits_ >> v) & 1ULL; }
    void insert(VarId v) { bits_ |= 1ULL << v; }
    void erase(VarId v) { bits_ &= ~(1ULL << v); }
    bool empty() const { return bits_ == 0; }
    int size() const { return __builtin_popcountll(bits_); }
    uint64_t bits() const { return bits_; }

    VertexSet operator|(VertexSet o) const { return VertexSet(bits_ | o.bits_); }
    VertexSet operator&(VertexSet o) const { return VertexSet(bits_ & o.bits_); }
    VertexSet minus(VertexSet o) const { return VertexSet(bits_ & ~o.bits_); }
    VertexSet& operator|=(VertexSet o) { bits_ |= o.bits_; return *this; }
    bool subset_of(VertexSet o) const { return (bits_ & ~o.bits_) == 0; }
    bool intersects(VertexSet o) const { return (bits_ & o.bits_) != 0; }

    bool operator==(const VertexSet&) const = default;

    std::vector<VarId> to_vector() const {
        std::vector<VarId> out;
        uint64_t b = bits_;
        while (b) {
            out.push_back(__builtin_ctzll(b));
            b &= b - 1;
        }
        return out;
    }

private:
    uint64_t bits_ = 0;
};

// Orders sets by cardinality, then lexicographically on ascending indices.
// Used everywhere a deterministic enumeration order of vertex sets is needed.
bool vertex_set_less(VertexSet a, VertexSet b);

// Acyclic directed mixed graph: a DAG plus unordered bidirected edges, with a
// designated reward vertex. Bidirected edges are stored canonically as
// (min, max) pairs. Construction rejects self loops, unknown vertices and
// directed cycles.
class Admg {
public:
    Admg(std::vector<std::string> names, VarId reward);

    // Vertices named V1..V{n-1}, Y; the last vertex is the reward.
    static Admg with_reward_last(int n);

    int size() const { return n_; }
    VarId reward() const { return reward_; }
    const std::string& name(VarId v) const { check_vertex(v); return names_[v]; }
    const std::vector<std::string>& names() const { return names_; }
    VarId id_of(const std::string& name) const; // DomainError if unknown
    VertexSet vertices() const { return VertexSet::full(n_); }

    void add_edge(VarId tail, VarId head);
    void add_bidirected(VarId a, VarId b);
    void remove_bidirected(VarId a, VarId b);

    bool has_edge(VarId tail, VarId head) const {
        check_vertex(tail); check_vertex(head);
        return children_mask(tail).contains(head);
    }
    bool has_bidirected(VarId a, VarId b) const {
        check_vertex(a); check_vertex(b);
        return siblings_mask(a).contains(b);
    }

    VertexSet parents_mask(VarId v) const { check_vertex(v); return VertexSet(pa_[v]); }
    VertexSet children_mask(VarId v) const { check_vertex(v); return VertexSet(ch_[v]); }
    VertexSet siblings_mask(VarId v) const { check_vertex(v); return VertexSet(sib_[v]); }

    // Parents of any member of s, minus nothing (callers subtract what they need).
    VertexSet parents_of_set(VertexSet s) const;

    std::vector<std::pair<VarId, VarId>> directed_edges() const;
    std::vector<std::pair<VarId, VarId>> bidirected_edges() const;

    bool operator==(const Admg& o) const {
        return n_ == o.n_ && reward_ == o.reward_ && pa_ == o.pa_ && sib_ == o.sib_;
    }

    void check_vertex(VarId v) const {
        if (v < 0 || v >= n_) {
            throw DomainError("unknown vertex id " + std::to_string(v));
        }
    }

private:
    int n_;
    VarId reward_;
    std::vector<std::string> names_;
    std::vector<uint64_t> pa_;
    std::vector<uint64_t> ch_;
    std::vector<uint64_t> sib_;
};

enum class Relation { parents, children, ancestors, descendants };

// Relations under directed edges only; ancestors/descendants are transitive
// and exclude v itself.
VertexSet ancestors(const Admg& g, VarId v);
VertexSet descendants(const Admg& g, VarId v);
VertexSet relation_query(const Admg& g, VarId v, Relation kind);

// Directed edge (u,v) present iff u is an ancestor of v; bidirected edges kept.
Admg transitive_closure(const Admg& g);

// Unique minimal edge set with the same closure; bidirected edges kept.
Admg transitive_reduction(const Admg& g);

// Hard intervention on w: removes directed edges into w and bidirected edges
// touching w.
Admg do_graph(const Admg& g, VertexSet w);

// Maximal set of vertices connected to v by bidirected paths (includes v).
VertexSet c_component(const Admg& g, VarId v);
VertexSet c_component_of_set(const Admg& g, VertexSet s);

// Minimal unobserved-confounder territory of y: the fixpoint of
// T <- De_H(CC_H(T)) from {y} inside H = g[An(y) + {y}], closed under both
// descendants and c-components within H.
VertexSet muct(const Admg& g, VarId y);

// Parents of muct(g,y) outside it.
VertexSet interventional_border(const Admg& g, VarId y);

// Deduplicated family of vertex sets in the canonical vertex_set_less order.
class PomisFamily {
public:
    void insert(VertexSet s);
    bool contains(VertexSet s) const;
    int size() const { return static_cast<int>(members_.size()); }
    const std::vector<VertexSet>& members() const { return members_; }
    auto begin() const { return members_.begin(); }
    auto end() const { return members_.end(); }
    bool operator==(const PomisFamily&) const = default;

private:
    std::vector<VertexSet> members_; // sorted by vertex_set_less, unique
};

// All interventional borders of post-intervention graphs, i.e.
// { IB(do_graph(g, W), Y) : W subset of V \ {Y} }. Exponential in the vertex
// count; refuses graphs larger than max_vertices.
PomisFamily enumerate_pomis(const Admg& g, int max_vertices = 22);

// Same family when every vertex outside `candidates` is isolated; enumerates
// W over subsets of candidates \ {Y} only.
PomisFamily enumerate_pomis_within(const Admg& g, VertexSet candidates, int max_vertices = 22);

std::string to_string(const Admg& g, VertexSet s); // "{V1,V2}" using vertex names

} // namespace cbandit

#endif
