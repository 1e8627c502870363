#pragma once

#include <bit>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ddsl/estimator.hpp"
#include "ddsl/graph.hpp"
#include "ddsl/pattern.hpp"

namespace ddsl {

// Canonical text form of a fragment, used to memoize and to key size tables.
inline std::string fragment_key(const Graph& g) {
  std::string key = "v:";
  bool first = true;
  for (VertexId v : g.vertices()) {
    if (!first) key += ',';
    key += std::to_string(v);
    first = false;
  }
  key += ";e:";
  first = true;
  for (const Edge& e : g.edges()) {
    if (!first) key += ',';
    key += std::to_string(e.a) + "-" + std::to_string(e.b);
    first = false;
  }
  return key;
}

// Estimated stored size of a fragment's match set, in id units. Backed by a
// callable so tests can pin exact values through from_table.
class SizeModel {
 public:
  using Fn = std::function<double(const Graph&)>;

  explicit SizeModel(Fn fn) : fn_(std::move(fn)) {}

  double operator()(const Graph& frag) const { return fn_(frag); }

  // Compressed-store size estimate: cover vertices appear once per skeleton
  // (approximated by the cover-induced fragment's match count), the others
  // once per full match.
  static SizeModel from_estimator(const DegreeDistribution& dist, VertexCover cover,
                                  Ord ord) {
    Ord closed = transitive_closure(ord);
    auto cache = std::make_shared<std::map<std::string, double>>();
    return SizeModel([dist, cover = std::move(cover), closed,
                      cache](const Graph& frag) -> double {
      std::string key = fragment_key(frag);
      if (auto it = cache->find(key); it != cache->end()) return it->second;
      std::set<VertexId> on_cover, off_cover;
      for (VertexId v : frag.vertices())
        (cover.count(v) ? on_cover : off_cover).insert(v);
      double units = 0;
      if (!on_cover.empty())
        units += static_cast<double>(on_cover.size()) *
                 expected_matches(frag.induced(on_cover), restrict_ord(closed, on_cover),
                                  dist);
      if (!off_cover.empty())
        units += static_cast<double>(off_cover.size()) *
                 expected_matches(frag, restrict_ord(closed, frag.vertex_set()), dist);
      (*cache)[key] = units;
      return units;
    });
  }

  static SizeModel from_table(std::map<std::string, double> table) {
    return SizeModel([table = std::move(table)](const Graph& frag) -> double {
      auto it = table.find(fragment_key(frag));
      if (it == table.end())
        throw DomainError("no size entry for fragment " + fragment_key(frag));
      return it->second;
    });
  }

 private:
  Fn fn_;
};

struct JoinTreeNode {
  Graph sub;                    // fragment handled at this node
  std::optional<R1Unit> unit;   // present iff this node is a leaf
  int left = -1;
  int right = -1;
  double size = 0;              // S(sub) under the planning size model
};

struct JoinTree {
  std::vector<JoinTreeNode> nodes;
  int root = -1;
  double recursive_cost = 0;    // leaf: S(q); join: C_l + C_r + 5 S_l + 5 S_r + S
};

namespace detail {

using EdgeMask = std::uint32_t;

struct PlanEntry {
  double cost = 0;
  double size = 0;
  bool leaf = false;
  VertexId anchor = 0;
  EdgeMask left = 0;
  EdgeMask right = 0;
  std::set<VertexId> verts;
};

// Deterministic preference among equal-cost plans: leaves first, then the
// smallest split, then the smallest anchor.
inline bool plan_better(const PlanEntry& a, const PlanEntry& b) {
  if (a.cost != b.cost) return a.cost < b.cost;
  if (a.leaf != b.leaf) return a.leaf;
  if (a.leaf) return a.anchor < b.anchor;
  if (a.left != b.left) return a.left < b.left;
  return a.right < b.right;
}

}  // namespace detail

// Least-cost join tree over one cover, by dynamic programming on edge
// subsets. Leaves are the radius-1 units; a join requires the halves to be
// edge-disjoint and to share a cover vertex. Joins are relaxed layer by
// layer, so both halves are final before their union is considered.
inline JoinTree optimal_join_tree(const Pattern& p, const VertexCover& cover,
                                  const SizeModel& sizes) {
  const Graph& g = p.graph();
  if (g.edge_count() == 0) throw DomainError("pattern has no edges");
  if (g.edge_count() > 20) throw ScaleError("too many pattern edges to plan");
  if (!is_vertex_cover(g, cover)) throw DomainError("not a vertex cover of the pattern");
  if (!g.induced(cover).connected())
    throw DomainError("cover does not induce a connected subpattern");

  std::vector<Edge> edge_index = g.edges();
  int bits = static_cast<int>(edge_index.size());
  std::map<Edge, int> bit_of;
  for (int i = 0; i < bits; ++i) bit_of[edge_index[i]] = i;

  auto mask_graph = [&](detail::EdgeMask m) {
    Graph f;
    for (int i = 0; i < bits; ++i)
      if (m & (detail::EdgeMask{1} << i)) f.add_edge(edge_index[i].a, edge_index[i].b);
    return f;
  };

  std::map<detail::EdgeMask, detail::PlanEntry> table;
  for (const R1Unit& unit : enumerate_r1_units(g, cover)) {
    detail::EdgeMask m = 0;
    for (const Edge& e : unit.graph.edges()) m |= detail::EdgeMask{1} << bit_of.at(e);
    detail::PlanEntry cand;
    cand.size = sizes(unit.graph);
    cand.cost = cand.size;
    cand.leaf = true;
    cand.anchor = unit.anchor;
    cand.verts = unit.graph.vertex_set();
    auto it = table.find(m);
    if (it == table.end() || detail::plan_better(cand, it->second))
      table[m] = std::move(cand);
  }

  std::map<int, std::vector<detail::EdgeMask>> by_count;
  for (int layer = 1; layer <= bits; ++layer) {
    for (int ca = 1; ca * 2 <= layer; ++ca) {
      int cb = layer - ca;
      auto ita = by_count.find(ca);
      auto itb = by_count.find(cb);
      if (ita == by_count.end() || itb == by_count.end()) continue;
      for (detail::EdgeMask a : ita->second) {
        for (detail::EdgeMask b : itb->second) {
          if (ca == cb && b <= a) continue;
          if (a & b) continue;
          const detail::PlanEntry& ea = table.at(a);
          const detail::PlanEntry& eb = table.at(b);
          bool shared = false;
          for (VertexId v : ea.verts) {
            if (cover.count(v) && eb.verts.count(v)) {
              shared = true;
              break;
            }
          }
          if (!shared) continue;
          detail::EdgeMask t = a | b;
          Graph sub = mask_graph(t);
          detail::PlanEntry cand;
          cand.size = sizes(sub);
          cand.cost = ea.cost + eb.cost + 5 * (ea.size + eb.size) + cand.size;
          cand.left = std::min(a, b);
          cand.right = std::max(a, b);
          cand.verts = ea.verts;
          cand.verts.insert(eb.verts.begin(), eb.verts.end());
          auto it = table.find(t);
          if (it == table.end() || detail::plan_better(cand, it->second))
            table[t] = std::move(cand);
        }
      }
    }
    for (const auto& [m, entry] : table)
      if (std::popcount(m) == layer) by_count[layer].push_back(m);
  }

  detail::EdgeMask full = bits == 32 ? ~detail::EdgeMask{0}
                                     : (detail::EdgeMask{1} << bits) - 1;
  if (!table.count(full)) throw Error("no join tree reaches the whole pattern");

  JoinTree tree;
  std::function<int(detail::EdgeMask)> emit = [&](detail::EdgeMask m) -> int {
    const detail::PlanEntry& e = table.at(m);
    JoinTreeNode node;
    node.sub = mask_graph(m);
    node.size = e.size;
    if (e.leaf) {
      node.unit = R1Unit{node.sub, e.anchor};
    } else {
      node.left = emit(e.left);
      node.right = emit(e.right);
    }
    tree.nodes.push_back(std::move(node));
    return static_cast<int>(tree.nodes.size() - 1);
  };
  tree.root = emit(full);
  tree.recursive_cost = table.at(full).cost;
  return tree;
}

struct CompressionChoice {
  VertexCover cover;
  double ratio = 0;     // estimated lower bound on plain/compressed size
  double m_p_hat = 0;   // estimated matches of the pattern
  double m_c_hat = 0;   // estimated matches of the cover-induced subpattern
};

namespace detail {

// Raw ratio estimate for a cover; +inf when the estimated compressed size
// collapses to zero or below (hub-heavy skeletons can shrink under estimates).
inline double cover_ratio(double vp, double vc, double mp, double mc) {
  if (mp == 0) return 0;
  double denom = vp * mp + vc * (mc - mp);
  if (denom <= 0) return std::numeric_limits<double>::infinity();
  return vp * mp / denom;
}

}  // namespace detail

// Best connected cover by estimated compression ratio. Candidates are the
// minimal connected covers plus the full vertex set; padding a minimal cover
// only inflates the skeleton term, so non-minimal strict covers never help.
// Ties fall to the smaller, then lexicographically first cover, so the
// full-vertex cover (ratio 1) only wins when nothing beats it.
inline CompressionChoice optimal_connected_compression(const Pattern& p,
                                                       const DegreeDistribution& dist) {
  const Graph& g = p.graph();
  if (g.edge_count() == 0) throw DomainError("pattern has no edges");
  Ord closed = transitive_closure(p.ord());
  double vp = static_cast<double>(g.vertex_count());
  double mp = expected_matches(g, p.ord(), dist);

  std::optional<CompressionChoice> best;
  for (const VertexCover& cover : enumerate_vertex_covers(g, /*connected_only=*/true)) {
    if (cover.empty()) continue;
    double mc = expected_matches(g.induced(cover), restrict_ord(closed, cover), dist);
    CompressionChoice cand{cover, detail::cover_ratio(vp, cover.size(), mp, mc), mp, mc};
    if (!best || cand.ratio > best->ratio ||
        (cand.ratio == best->ratio && (cand.cover.size() < best->cover.size() ||
                                       (cand.cover.size() == best->cover.size() &&
                                        cand.cover < best->cover))))
      best = std::move(cand);
  }
  if (!best) throw Error("pattern has no connected vertex cover");
  return *best;
}

struct PlanResult {
  VertexCover cover;
  JoinTree tree;
  double est_cost = 0;   // leaves-and-joins recursion + storage scan + decompression
  double ratio_hat = 0;
  double m_p_hat = 0;
  double m_c_hat = 0;
};

// Full planning pass: every connected cover gets a size model and an optimal
// tree; the winner minimizes the end-to-end estimated cost including the
// final decompression.
inline PlanResult plan(const Pattern& p, const DegreeDistribution& dist,
                       double storage_units = 0) {
  const Graph& g = p.graph();
  if (g.edge_count() == 0) throw DomainError("pattern has no edges");
  Ord closed = transitive_closure(p.ord());
  double vp = static_cast<double>(g.vertex_count());
  double mp = expected_matches(g, p.ord(), dist);

  std::optional<PlanResult> best;
  for (const VertexCover& cover : all_vertex_covers(g, /*connected_only=*/true)) {
    if (cover.empty()) continue;
    SizeModel sizes = SizeModel::from_estimator(dist, cover, p.ord());
    JoinTree tree = optimal_join_tree(p, cover, sizes);
    double root_size = tree.nodes[tree.root].size;
    double total = tree.recursive_cost + storage_units + root_size + vp * mp;
    double mc = expected_matches(g.induced(cover), restrict_ord(closed, cover), dist);
    PlanResult cand;
    cand.cover = cover;
    cand.tree = std::move(tree);
    cand.est_cost = total;
    cand.ratio_hat = detail::cover_ratio(vp, cover.size(), mp, mc);
    cand.m_p_hat = mp;
    cand.m_c_hat = mc;
    if (!best || cand.est_cost < best->est_cost ||
        (cand.est_cost == best->est_cost &&
         (cand.cover.size() < best->cover.size() ||
          (cand.cover.size() == best->cover.size() && cand.cover < best->cover))))
      best = std::move(cand);
  }
  if (!best) throw Error("pattern has no connected vertex cover");
  return *best;
}

// Join order for the incremental path: one left-deep chain per pivot unit,
// extending by the first remaining unit that shares a cover vertex with the
// prefix. keys[j] holds the shared cover vertices used at level j + 1.
struct LeftDeepPlan {
  std::vector<std::size_t> order;
  std::vector<std::set<VertexId>> keys;
};

inline std::vector<LeftDeepPlan> left_deep_trees(const Decomposition& decomp) {
  std::size_t t = decomp.units.size();
  if (t == 0) throw DomainError("empty decomposition");
  std::vector<LeftDeepPlan> plans;
  for (std::size_t pivot = 0; pivot < t; ++pivot) {
    LeftDeepPlan plan;
    plan.order.push_back(pivot);
    std::set<VertexId> prefix = decomp.units[pivot].graph.vertex_set();
    std::set<std::size_t> remaining;
    for (std::size_t j = 0; j < t; ++j)
      if (j != pivot) remaining.insert(j);
    while (!remaining.empty()) {
      std::optional<std::size_t> next;
      std::set<VertexId> key;
      for (std::size_t j : remaining) {
        key.clear();
        for (VertexId v : decomp.units[j].graph.vertex_set())
          if (prefix.count(v) && decomp.cover.count(v)) key.insert(v);
        if (!key.empty()) {
          next = j;
          break;
        }
      }
      if (!next) throw Error("decomposition units do not chain over the cover");
      plan.order.push_back(*next);
      plan.keys.push_back(key);
      for (VertexId v : decomp.units[*next].graph.vertex_set()) prefix.insert(v);
      remaining.erase(*next);
    }
    plans.push_back(std::move(plan));
  }
  return plans;
}

}  // namespace ddsl
