#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "ddsl/compression.hpp"
#include "ddsl/graph.hpp"
#include "ddsl/np_storage.hpp"
#include "ddsl/pattern.hpp"

namespace ddsl {

namespace detail {

// Vertex order for backtracking: breadth-first from the smallest id so each
// vertex has a matched neighbor when it is placed. Later roots pick up the
// remaining components of a disconnected fragment.
inline std::vector<VertexId> search_order(const Graph& g) {
  std::vector<VertexId> order;
  std::set<VertexId> seen;
  std::vector<VertexId> queue;
  auto push = [&](VertexId v) {
    if (seen.insert(v).second) queue.push_back(v);
  };
  for (VertexId v : g.vertices()) {
    push(v);
    while (order.size() < queue.size()) {
      VertexId u = queue[order.size()];
      order.push_back(u);
      for (VertexId w : g.neighbors(u)) push(w);
    }
  }
  return order;
}

struct MatchSearch {
  const Graph& frag;
  const Ord& ord;
  const Graph& host;
  std::vector<VertexId> order;
  Match current;
  std::set<VertexId> used;
  std::vector<Match>* out;

  bool consistent(VertexId v, VertexId image) const {
    if (used.count(image)) return false;
    for (VertexId w : frag.neighbors(v)) {
      auto it = current.find(w);
      if (it != current.end() && !host.has_edge(image, it->second)) return false;
    }
    for (const auto& [a, b] : ord) {
      if (a == v) {
        auto it = current.find(b);
        if (it != current.end() && !(image < it->second)) return false;
      } else if (b == v) {
        auto it = current.find(a);
        if (it != current.end() && !(it->second < image)) return false;
      }
    }
    return true;
  }

  void place(std::size_t depth, const std::map<VertexId, VertexId>* forced,
             const std::set<VertexId>* domain) {
    if (depth == order.size()) {
      out->push_back(current);
      return;
    }
    VertexId v = order[depth];
    auto extend = [&](VertexId image) {
      if (!consistent(v, image)) return;
      current[v] = image;
      used.insert(image);
      place(depth + 1, forced, domain);
      used.erase(image);
      current.erase(v);
    };
    if (forced) {
      auto it = forced->find(v);
      if (it != forced->end()) {
        if (!domain || domain->count(it->second)) extend(it->second);
        return;
      }
    }
    // Prefer the neighborhood of an already-placed fragment neighbor.
    for (VertexId w : frag.neighbors(v)) {
      auto it = current.find(w);
      if (it == current.end()) continue;
      for (VertexId image : host.neighbors(it->second))
        if (!domain || domain->count(image)) extend(image);
      return;
    }
    if (domain) {
      for (VertexId image : *domain) extend(image);
    } else {
      for (VertexId image : host.vertices()) extend(image);
    }
  }
};

}  // namespace detail

// Reference listing by exhaustive backtracking over the whole host graph.
// Order constraints are checked pairwise as vertices are placed.
inline std::vector<Match> oracle_list(const Graph& frag, const Ord& ord, const Graph& d) {
  if (frag.vertex_count() == 0) throw DomainError("cannot list an empty fragment");
  if (frag.vertex_count() > Pattern::kMaxVertices)
    throw ScaleError("fragment too large for exhaustive listing");
  if (d.vertex_count() > 5000)
    throw ScaleError("host graph too large for exhaustive listing");
  std::vector<Match> out;
  detail::MatchSearch search{frag, ord, d, detail::search_order(frag), {}, {}, &out};
  search.place(0, nullptr, nullptr);
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<Match> oracle_list(const Pattern& p, const Graph& d) {
  return oracle_list(p.graph(), p.ord(), d);
}

// Anchor-center listing: matches of a radius-1 unit inside one partition,
// anchor pinned to that partition's centers. Every non-anchor vertex is a
// unit neighbor of the anchor, so images stay inside the center's local
// graph and the partition is self-sufficient.
inline std::vector<Match> list_ac(const R1Unit& unit, const NPPartition& part,
                                  const Ord& ord,
                                  const std::optional<Match>& bindings = {}) {
  if (!is_r1_unit(unit)) throw DomainError("not a radius-1 unit");
  const Graph& q = unit.graph;
  Ord local = restrict_ord(ord, q.vertex_set());

  // Anchor first, then remaining unit vertices by falling degree.
  std::vector<VertexId> order{unit.anchor};
  std::vector<VertexId> rest;
  for (VertexId v : q.vertices())
    if (v != unit.anchor) rest.push_back(v);
  std::sort(rest.begin(), rest.end(), [&](VertexId a, VertexId b) {
    auto da = q.degree(a), db = q.degree(b);
    return da != db ? da > db : a < b;
  });
  order.insert(order.end(), rest.begin(), rest.end());

  std::vector<VertexId> anchors;
  if (bindings) {
    auto it = bindings->find(unit.anchor);
    if (it != bindings->end()) {
      if (part.centers.count(it->second)) anchors.push_back(it->second);
    } else {
      anchors.assign(part.centers.begin(), part.centers.end());
    }
  } else {
    anchors.assign(part.centers.begin(), part.centers.end());
  }

  std::vector<Match> out;
  for (VertexId c : anchors) {
    if (part.subgraph.degree(c) + 1 < q.vertex_count()) continue;
    // Bound non-anchor vertices must already sit next to the center.
    if (bindings) {
      bool ok = true;
      for (const auto& [v, image] : *bindings) {
        if (v == unit.anchor) continue;
        if (!q.has_vertex(v)) continue;
        if (!part.subgraph.has_edge(c, image)) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
    }
    detail::MatchSearch search{q, local, part.subgraph, order, {}, {}, &out};
    search.current[unit.anchor] = c;
    search.used.insert(c);
    const Match* forced = bindings ? &*bindings : nullptr;
    std::set<VertexId> domain = part.subgraph.neighbors(c);
    search.place(1, forced, &domain);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Matches of one unit in one partition, grouped into compressed records over
// the cover. Optional bindings pin vertices (join keys) to fixed images.
inline std::vector<CompressedMatch> list_unit_compressed(
    const R1Unit& unit, const NPPartition& part, const VertexCover& cover,
    const Ord& ord, const std::optional<Match>& bindings = {}) {
  if (!cover.count(unit.anchor))
    throw DomainError("unit anchor is not in the cover");
  std::vector<Match> matches = list_ac(unit, part, ord, bindings);
  return compress(matches, unit.graph, cover);
}

// Unit matches in the updated graph that use at least one inserted edge,
// compressed and split so each record touches the insertions.
inline std::vector<CompressedMatch> new_unit_matches(const R1Unit& unit,
                                                     const NPPartition& part,
                                                     const VertexCover& cover,
                                                     const Ord& ord,
                                                     const std::set<Edge>& added) {
  std::vector<CompressedMatch> out;
  for (const CompressedMatch& cm : list_unit_compressed(unit, part, cover, ord))
    for (CompressedMatch& hit : restrict_touching(cm, unit.graph, added))
      out.push_back(std::move(hit));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace ddsl
