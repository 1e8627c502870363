#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ddsl/graph.hpp"

namespace ddsl {

// Order constraints on pattern vertices: (a, b) requires f(a) < f(b) for
// every listed match f. Data-vertex order is the numeric id order.
using Ord = std::set<std::pair<VertexId, VertexId>>;

using VertexCover = std::set<VertexId>;

// Bijection on the pattern vertex set.
using Permutation = std::map<VertexId, VertexId>;

inline Ord restrict_ord(const Ord& ord, const std::set<VertexId>& verts) {
  Ord out;
  for (const auto& [a, b] : ord)
    if (verts.count(a) && verts.count(b)) out.emplace(a, b);
  return out;
}

// Constraints implied by transitivity. Restricting a closed order to a vertex
// subset keeps constraints whose witnesses fall outside the subset.
inline Ord transitive_closure(const Ord& ord) {
  Ord out = ord;
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& [a, b] : Ord(out))
      for (const auto& [c, d] : Ord(out))
        if (b == c && out.emplace(a, d).second) grew = true;
  }
  return out;
}

namespace detail {

// All edge-preserving bijections of g onto itself, by backtracking over the
// sorted vertex list. With `ord`, keeps only maps where every constrained
// pair lands in increasing id order.
inline std::vector<Permutation> automorphisms_of(const Graph& g, const Ord* ord) {
  std::vector<VertexId> verts = g.vertices();
  std::size_t n = verts.size();
  std::vector<std::size_t> deg(n);
  std::map<VertexId, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) {
    deg[i] = g.degree(verts[i]);
    index[verts[i]] = i;
  }

  std::vector<std::size_t> image(n, n);  // index -> image index
  std::vector<bool> used(n, false);
  std::vector<Permutation> out;

  auto consistent = [&](std::size_t i, std::size_t img) {
    if (deg[i] != deg[img]) return false;
    for (std::size_t j = 0; j < i; ++j) {
      bool pe = g.has_edge(verts[i], verts[j]);
      bool ie = g.has_edge(verts[img], verts[image[j]]);
      if (pe != ie) return false;
    }
    return true;
  };

  auto emit = [&] {
    Permutation p;
    for (std::size_t i = 0; i < n; ++i) p[verts[i]] = verts[image[i]];
    if (ord) {
      for (const auto& [a, b] : *ord)
        if (!(p.at(a) < p.at(b))) return;
    }
    out.push_back(std::move(p));
  };

  auto rec = [&](auto&& self, std::size_t i) -> void {
    if (i == n) {
      emit();
      return;
    }
    for (std::size_t img = 0; img < n; ++img) {
      if (used[img] || !consistent(i, img)) continue;
      used[img] = true;
      image[i] = img;
      self(self, i + 1);
      used[img] = false;
    }
  };
  rec(rec, 0);
  return out;
}

// Drops constraints implied by transitivity; id comparison is transitive, so
// the admissible match set is unchanged.
inline Ord transitive_reduction(const Ord& ord) {
  std::set<std::pair<VertexId, VertexId>> closure = ord;
  bool grew = true;
  while (grew) {
    grew = false;
    std::vector<std::pair<VertexId, VertexId>> add;
    for (const auto& [a, b] : closure)
      for (const auto& [c, d] : closure)
        if (b == c && !closure.count({a, d})) add.emplace_back(a, d);
    for (const auto& e : add) grew |= closure.insert(e).second;
  }
  Ord out;
  for (const auto& [a, b] : ord) {
    bool implied = false;
    for (const auto& [c, d] : closure) {
      if (c == a && d != b && closure.count({d, b})) {
        implied = true;
        break;
      }
    }
    if (!implied) out.emplace(a, b);
  }
  return out;
}

}  // namespace detail

inline std::vector<Permutation> enumerate_automorphisms(const Graph& g, const Ord& ord,
                                                        bool respect_ord) {
  if (g.vertex_count() > 8) throw ScaleError("pattern larger than 8 vertices");
  return detail::automorphisms_of(g, respect_ord ? &ord : nullptr);
}

// Symmetry-breaking order: repeatedly take the smallest-id vertex lying in a
// nontrivial orbit of the surviving automorphisms and constrain it below its
// orbit mates. Terminates with exactly one surviving automorphism.
inline Ord generate_simb_order(const Graph& g) {
  if (g.vertex_count() > 8) throw ScaleError("pattern larger than 8 vertices");
  Ord ord;
  for (;;) {
    auto autos = detail::automorphisms_of(g, &ord);
    if (autos.size() <= 1) break;
    // Orbits under the surviving set (a group; see the stabilizer argument).
    std::map<VertexId, std::set<VertexId>> orbit;
    for (const auto& p : autos)
      for (const auto& [v, img] : p) orbit[v].insert(img);
    VertexId pick = 0;
    bool found = false;
    for (const auto& [v, o] : orbit) {
      if (o.size() > 1) {
        pick = v;
        found = true;
        break;
      }
    }
    if (!found) throw Error("automorphism group nontrivial but all orbits fixed");
    for (VertexId mate : orbit[pick])
      if (mate != pick) ord.emplace(pick, mate);
  }
  ord = detail::transitive_reduction(ord);
  if (detail::automorphisms_of(g, &ord).size() != 1)
    throw Error("generated order does not break all symmetry");
  return ord;
}

// Connected pattern, at most 8 vertices, with a symmetry-complete order.
class Pattern {
public:
  static constexpr std::size_t kMaxVertices = 8;

  Pattern(Graph g, Ord ord) : g_(std::move(g)), ord_(std::move(ord)) {
    if (g_.vertex_count() == 0) throw DomainError("empty pattern");
    if (g_.vertex_count() > kMaxVertices)
      throw ScaleError("pattern larger than 8 vertices");
    if (!g_.connected()) throw DomainError("pattern graph not connected");
    auto vs = g_.vertex_set();
    for (const auto& [a, b] : ord_) {
      if (a == b) throw DomainError("reflexive order constraint");
      if (!vs.count(a) || !vs.count(b))
        throw DomainError("order constraint on unknown pattern vertex");
    }
    if (detail::automorphisms_of(g_, &ord_).size() != 1)
      throw DomainError("order does not break pattern symmetry completely");
  }

  static Pattern with_generated_order(Graph g) {
    Ord ord = generate_simb_order(g);
    return Pattern(std::move(g), std::move(ord));
  }

  const Graph& graph() const { return g_; }
  const Ord& ord() const { return ord_; }
  std::vector<VertexId> vertices() const { return g_.vertices(); }

private:
  Graph g_;
  Ord ord_;
};

inline std::vector<Permutation> enumerate_automorphisms(const Pattern& p,
                                                        bool respect_ord) {
  return enumerate_automorphisms(p.graph(), p.ord(), respect_ord);
}

inline bool is_vertex_cover(const Graph& g, const VertexCover& cover) {
  for (const Edge& e : g.edges())
    if (!cover.count(e.a) && !cover.count(e.b)) return false;
  return true;
}

// All minimal-by-inclusion covers plus the full vertex set. With
// `connected_only`, keeps covers whose induced subgraph is connected.
inline std::vector<VertexCover> enumerate_vertex_covers(const Graph& g,
                                                        bool connected_only) {
  if (g.vertex_count() > 8) throw ScaleError("pattern larger than 8 vertices");
  std::vector<VertexId> verts = g.vertices();
  std::size_t n = verts.size();
  std::vector<VertexCover> covers;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    VertexCover c;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) c.insert(verts[i]);
    if (!is_vertex_cover(g, c)) continue;
    bool minimal = true;
    for (VertexId v : c) {
      VertexCover smaller = c;
      smaller.erase(v);
      if (is_vertex_cover(g, smaller)) {
        minimal = false;
        break;
      }
    }
    if (minimal) covers.push_back(std::move(c));
  }
  VertexCover full = g.vertex_set();
  if (std::find(covers.begin(), covers.end(), full) == covers.end())
    covers.push_back(full);
  if (connected_only) {
    std::vector<VertexCover> kept;
    for (auto& c : covers) {
      if (c.empty()) continue;
      if (g.induced(c).connected()) kept.push_back(std::move(c));
    }
    covers = std::move(kept);
  }
  std::sort(covers.begin(), covers.end(), [](const VertexCover& a, const VertexCover& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  return covers;
}

// Every cover, minimal or not. Join-tree planning scans these when picking
// the cheapest cover; pattern sizes keep the 2^n walk cheap.
inline std::vector<VertexCover> all_vertex_covers(const Graph& g, bool connected_only) {
  if (g.vertex_count() > 8) throw ScaleError("pattern larger than 8 vertices");
  std::vector<VertexId> verts = g.vertices();
  std::size_t n = verts.size();
  std::vector<VertexCover> covers;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    VertexCover c;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) c.insert(verts[i]);
    if (!is_vertex_cover(g, c)) continue;
    if (connected_only && (c.empty() || !g.induced(c).connected())) continue;
    covers.push_back(std::move(c));
  }
  std::sort(covers.begin(), covers.end(), [](const VertexCover& a, const VertexCover& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  return covers;
}

// Radius-1 subgraph: the anchor is adjacent, within the unit's own edges, to
// every other unit vertex.
struct R1Unit {
  Graph graph;
  VertexId anchor = 0;

  bool operator==(const R1Unit&) const = default;
};

inline bool is_r1_unit(const R1Unit& q) {
  if (!q.graph.has_vertex(q.anchor)) return false;
  if (q.graph.edge_count() == 0) return false;
  return q.graph.neighbors(q.anchor).size() + 1 == q.graph.vertex_count();
}

namespace detail {

inline bool unit_less(const R1Unit& x, const R1Unit& y) {
  auto ex = x.graph.edges(), ey = y.graph.edges();
  if (ex != ey) return ex < ey;
  auto vx = x.graph.vertices(), vy = y.graph.vertices();
  if (vx != vy) return vx < vy;
  return x.anchor < y.anchor;
}

}  // namespace detail

// Every subgraph of p that is an R1 unit with at least one edge and an anchor
// drawn from the cover. One entry per (vertex set, edge set, anchor) triple.
inline std::vector<R1Unit> enumerate_r1_units(const Graph& p, const VertexCover& cover) {
  if (p.vertex_count() > 8) throw ScaleError("pattern larger than 8 vertices");
  std::vector<R1Unit> units;
  for (VertexId a : cover) {
    if (!p.has_vertex(a)) throw DomainError("cover vertex not in pattern");
    std::vector<VertexId> nbrs(p.neighbors(a).begin(), p.neighbors(a).end());
    std::size_t dn = nbrs.size();
    for (std::uint32_t smask = 1; smask < (1u << dn); ++smask) {
      std::vector<VertexId> spoke;
      for (std::size_t i = 0; i < dn; ++i)
        if (smask & (1u << i)) spoke.push_back(nbrs[i]);
      // Optional edges: pattern edges between spoke vertices.
      std::vector<Edge> optional_edges;
      for (std::size_t i = 0; i < spoke.size(); ++i)
        for (std::size_t j = i + 1; j < spoke.size(); ++j)
          if (p.has_edge(spoke[i], spoke[j]))
            optional_edges.emplace_back(spoke[i], spoke[j]);
      for (std::uint32_t tmask = 0; tmask < (1u << optional_edges.size()); ++tmask) {
        R1Unit q;
        q.anchor = a;
        q.graph.add_vertex(a);
        for (VertexId s : spoke) q.graph.add_edge(a, s);
        for (std::size_t i = 0; i < optional_edges.size(); ++i)
          if (tmask & (1u << i))
            q.graph.add_edge(optional_edges[i].a, optional_edges[i].b);
        units.push_back(std::move(q));
      }
    }
  }
  std::sort(units.begin(), units.end(), detail::unit_less);
  return units;
}

// Ordered unit set: minimum cardinality, anchors in the cover, edge sets
// covering E(p).
struct Decomposition {
  std::vector<R1Unit> units;
  VertexCover cover;
};

namespace detail {

// Lexicographically first covering k-subset of `units` (which are sorted), or
// nullopt. Prunes branches whose remaining units cannot cover what is left.
inline bool cover_search(const std::vector<R1Unit>& units,
                         const std::vector<std::set<Edge>>& unit_edges,
                         const std::set<Edge>& target, std::size_t k,
                         std::size_t from, std::set<Edge>& covered,
                         std::vector<std::size_t>& chosen) {
  if (chosen.size() == k) return covered == target;
  std::set<Edge> reachable = covered;
  for (std::size_t i = from; i < units.size(); ++i)
    reachable.insert(unit_edges[i].begin(), unit_edges[i].end());
  if (reachable != target) return false;
  for (std::size_t i = from; i + (k - chosen.size()) <= units.size(); ++i) {
    std::set<Edge> next = covered;
    next.insert(unit_edges[i].begin(), unit_edges[i].end());
    chosen.push_back(i);
    std::swap(covered, next);
    if (cover_search(units, unit_edges, target, k, i + 1, covered, chosen)) return true;
    std::swap(covered, next);
    chosen.pop_back();
  }
  return false;
}

}  // namespace detail

// Minimum-cardinality decomposition into R1 units anchored in the cover,
// tie-broken by the lexicographically smallest unit sequence. Unit order in
// the result is the total order the update path relies on.
inline Decomposition decompose(const Pattern& p, const VertexCover& cover) {
  const Graph& g = p.graph();
  if (g.edge_count() == 0) throw DomainError("cannot decompose an edgeless pattern");
  if (!is_vertex_cover(g, cover)) throw DomainError("not a vertex cover");

  // No connectivity demand on p[cover] here: decomposing works for any cover.
  // Joining the unit matches in parallel is what needs a connected cover, and
  // the planner enforces that on its own inputs.
  std::vector<R1Unit> units = enumerate_r1_units(g, cover);
  // Dense high-degree patterns can enumerate a large unit space. Restricting
  // the search to units that carry all induced spoke edges preserves the
  // minimum cardinality: closing a unit never shrinks coverage.
  if (units.size() > 4096) {
    std::vector<R1Unit> closed;
    for (auto& q : units) {
      bool full = true;
      auto vs = q.graph.vertex_set();
      for (VertexId v : vs)
        for (VertexId w : vs)
          if (v < w && g.has_edge(v, w) && !q.graph.has_edge(v, w)) full = false;
      if (full) closed.push_back(std::move(q));
    }
    units = std::move(closed);
  }

  std::vector<std::set<Edge>> unit_edges;
  unit_edges.reserve(units.size());
  for (const auto& q : units) {
    auto es = q.graph.edges();
    unit_edges.emplace_back(es.begin(), es.end());
  }
  auto all = g.edges();
  std::set<Edge> target(all.begin(), all.end());

  for (std::size_t k = 1; k <= units.size(); ++k) {
    std::set<Edge> covered;
    std::vector<std::size_t> chosen;
    if (detail::cover_search(units, unit_edges, target, k, 0, covered, chosen)) {
      Decomposition d;
      d.cover = cover;
      for (std::size_t i : chosen) d.units.push_back(units[i]);
      return d;
    }
  }
  throw DomainError("no decomposition exists for this cover");
}

// Pattern text format: "e u v" edges, optional "o u v" order constraints
// (meaning u before v), '#' comments. Without any "o" line the
// symmetry-breaking order is generated.
inline Pattern parse_pattern(std::istream& in) {
  Graph g;
  Ord ord;
  bool has_ord = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string kind, ta, tb, extra;
    if (!(ls >> kind)) continue;
    if ((kind != "e" && kind != "o") || !(ls >> ta >> tb) || (ls >> extra))
      throw ParseError("expected 'e u v' or 'o u v'", lineno);
    VertexId a, b;
    if (!detail::parse_vertex_token(ta, a) || !detail::parse_vertex_token(tb, b))
      throw ParseError("bad vertex id", lineno);
    if (kind == "e") {
      if (a == b) throw ParseError("self-loop pattern edge", lineno);
      g.add_edge(a, b);
    } else {
      if (a == b) throw ParseError("reflexive order constraint", lineno);
      ord.emplace(a, b);
      has_ord = true;
    }
  }
  if (has_ord) return Pattern(std::move(g), std::move(ord));
  return Pattern::with_generated_order(std::move(g));
}

inline Pattern read_pattern(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open pattern file: " + path);
  return parse_pattern(in);
}

}  // namespace ddsl
