#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ddsl/compression.hpp"
#include "ddsl/cost.hpp"
#include "ddsl/matcher.hpp"
#include "ddsl/np_storage.hpp"
#include "ddsl/parallel.hpp"
#include "ddsl/pattern.hpp"
#include "ddsl/planner.hpp"

namespace ddsl {

// Compressed match set of one fragment. Full listings hold one record per
// skeleton; stores built from record splits (the incremental patch path) may
// repeat a skeleton with disjoint candidate sets.
struct MatchStore {
  Graph frag;
  std::vector<CompressedMatch> records;

  std::uint64_t units() const {
    std::uint64_t total = 0;
    for (const auto& r : records) total += r.units();
    return total;
  }
};

namespace detail {

inline void sort_records(std::vector<CompressedMatch>& records) {
  std::sort(records.begin(), records.end());
}

// Decompress everything and compress again. Drops records whose candidate
// products die entirely in the decompression checks and re-tightens candidate
// sets, so stored units reflect real matches only. Idempotent.
inline MatchStore canonicalize(const MatchStore& store, const VertexCover& cover,
                               const Ord& ord, const Graph& d) {
  std::vector<Match> all;
  for (const CompressedMatch& cm : store.records)
    for (Match& m : decompress(cm, store.frag, ord, d)) all.push_back(std::move(m));
  std::sort(all.begin(), all.end());
  MatchStore out;
  out.frag = store.frag;
  out.records = compress(all, store.frag, cover);
  return out;
}

}  // namespace detail

// One round that lists every leaf unit from every partition. Reading the
// storage is charged once; the output charge is the stores that come back.
inline std::vector<MatchStore> run_leaves(const NPStorage& storage,
                                          const std::vector<R1Unit>& units,
                                          const VertexCover& cover, const Ord& ord,
                                          CostReport& cost, const ExecContext& ctx = {}) {
  std::vector<MatchStore> stores(units.size());
  for (std::size_t u = 0; u < units.size(); ++u) {
    stores[u].frag = units[u].graph;
    std::vector<std::vector<CompressedMatch>> parts(storage.m());
    parallel_for(ctx, storage.m(), [&](std::size_t k) {
      parts[k] = list_unit_compressed(units[u], storage.partitions[k], cover, ord);
    });
    for (auto& chunk : parts)
      for (CompressedMatch& cm : chunk) stores[u].records.push_back(std::move(cm));
    detail::sort_records(stores[u].records);
  }
  cost.map_in += storage.storage_units();
  for (const MatchStore& s : stores) cost.reduce_out += s.units();
  return stores;
}

// CC-join of two stores on their shared covered vertices. Records are grouped
// by key images; agreeing groups join pairwise. The cost convention: the map
// phase reads both stores and emits them keyed, the shuffle moves the keyed
// copies, the reducers read them once and write the joined store.
inline MatchStore run_join(const MatchStore& left, const MatchStore& right,
                           const VertexCover& cover, const Ord& ord, const Graph& d,
                           CostReport& cost) {
  std::set<VertexId> key;
  for (VertexId v : left.frag.vertices())
    if (cover.count(v) && right.frag.has_vertex(v)) key.insert(v);
  if (key.empty()) throw DomainError("join inputs share no covered vertex");

  Graph joined = graph_union(left.frag, right.frag);

  auto group = [&](const MatchStore& s) {
    std::map<std::vector<VertexId>, std::vector<const CompressedMatch*>> g;
    for (const CompressedMatch& cm : s.records) {
      std::vector<VertexId> images;
      for (VertexId v : key) images.push_back(cm.skeleton.at(v));
      g[images].push_back(&cm);
    }
    return g;
  };
  auto gl = group(left);
  auto gr = group(right);

  MatchStore out;
  out.frag = joined;
  for (const auto& [images, ls] : gl) {
    auto it = gr.find(images);
    if (it == gr.end()) continue;
    for (const CompressedMatch* a : ls)
      for (const CompressedMatch* b : it->second)
        if (auto j = cc_join(*a, *b, cover, joined, ord, d)) out.records.push_back(std::move(*j));
  }
  detail::sort_records(out.records);

  std::uint64_t in_units = left.units() + right.units();
  cost.map_in += 2 * in_units;
  cost.shuffle += 2 * in_units;
  cost.reduce_in += in_units;
  cost.reduce_out += out.units();
  return out;
}

struct EngineRound {
  std::string kind;   // "leaves", "join", "decompress"
  std::string label;
  CostReport cost;
};

struct EngineResult {
  MatchStore root;
  std::vector<Match> matches;        // filled when the run decompresses
  std::vector<EngineRound> rounds;
  CostReport total;
  std::uint64_t closed_form = 0;     // cost identity computed from store sizes
};

// Executes a join tree against the storage. Leaves run as one listing round,
// each internal node as one join round (the root join also rewrites its store
// in canonical form), and an optional final round decompresses the root.
inline EngineResult run_tree(const NPStorage& storage, const JoinTree& tree,
                             const VertexCover& cover, const Ord& ord, const Graph& d,
                             bool decompress_final = true, const ExecContext& ctx = {},
                             const std::filesystem::path& workspace = {}) {
  if (tree.root < 0 || tree.nodes.empty()) throw DomainError("empty join tree");
  EngineResult result;

  std::vector<std::size_t> leaf_nodes;
  std::vector<R1Unit> units;
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    if (tree.nodes[i].unit) {
      leaf_nodes.push_back(i);
      units.push_back(*tree.nodes[i].unit);
    }
  }

  EngineRound leaves{"leaves", "list units", {}};
  std::vector<MatchStore> leaf_stores =
      run_leaves(storage, units, cover, ord, leaves.cost, ctx);
  result.rounds.push_back(leaves);

  std::vector<MatchStore> stores(tree.nodes.size());
  std::vector<std::uint64_t> sizes(tree.nodes.size(), 0);
  for (std::size_t j = 0; j < leaf_nodes.size(); ++j) {
    stores[leaf_nodes[j]] = std::move(leaf_stores[j]);
    sizes[leaf_nodes[j]] = stores[leaf_nodes[j]].units();
  }

  // Children precede parents in the node list.
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const JoinTreeNode& node = tree.nodes[i];
    if (node.unit) continue;
    EngineRound round{"join", fragment_key(node.sub), {}};
    MatchStore joined = run_join(stores[node.left], stores[node.right], cover, ord, d,
                                 round.cost);
    if (static_cast<int>(i) == tree.root) {
      // The surviving records may still hold candidates that die during
      // decompression (cross-record constraints). The root reducer rewrites
      // its output in canonical form so the stored size is honest.
      std::uint64_t raw = joined.units();
      joined = detail::canonicalize(joined, cover, ord, d);
      round.cost.reduce_out -= raw;
      round.cost.reduce_out += joined.units();
    }
    sizes[i] = joined.units();
    stores[i] = std::move(joined);
    result.rounds.push_back(round);
  }

  // Single-unit trees: the leaf store is already canonical.
  MatchStore& root_store = stores[tree.root];

  if (decompress_final) {
    EngineRound round{"decompress", "expand root store", {}};
    round.cost.map_in = root_store.units();
    for (const CompressedMatch& cm : root_store.records)
      for (Match& m : decompress(cm, root_store.frag, ord, d))
        result.matches.push_back(std::move(m));
    std::sort(result.matches.begin(), result.matches.end());
    round.cost.reduce_out =
        static_cast<std::uint64_t>(root_store.frag.vertex_count()) *
        result.matches.size();
    result.rounds.push_back(round);
  }

  if (!workspace.empty()) {
    std::filesystem::create_directories(workspace);
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      std::ofstream out(workspace / ("node-" + std::to_string(i) + ".store"));
      out << "# fragment " << fragment_key(stores[i].frag) << '\n';
      for (const CompressedMatch& cm : stores[i].records)
        out << format_compressed(cm) << '\n';
    }
  }

  for (const EngineRound& r : result.rounds) result.total += r.cost;

  std::uint64_t nonroot = 0;
  for (std::size_t i = 0; i < tree.nodes.size(); ++i)
    if (static_cast<int>(i) != tree.root) nonroot += sizes[i];
  result.closed_form = storage.storage_units() + 6 * nonroot + sizes[tree.root];
  if (decompress_final)
    result.closed_form +=
        sizes[tree.root] +
        static_cast<std::uint64_t>(root_store.frag.vertex_count()) *
            result.matches.size();

  result.root = std::move(root_store);
  return result;
}

// Convenience wrapper: run a planned tree and return just the plain matches.
inline std::vector<Match> list_with_tree(const NPStorage& storage, const Pattern& p,
                                         const JoinTree& tree, const VertexCover& cover,
                                         const ExecContext& ctx = {}) {
  Graph d = storage.reconstruct();
  Ord closed = transitive_closure(p.ord());
  return run_tree(storage, tree, cover, closed, d, true, ctx).matches;
}

}  // namespace ddsl
