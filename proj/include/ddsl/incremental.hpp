#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ddsl/compression.hpp"
#include "ddsl/graph.hpp"
#include "ddsl/join_engine.hpp"
#include "ddsl/matcher.hpp"
#include "ddsl/np_storage.hpp"
#include "ddsl/parallel.hpp"
#include "ddsl/pattern.hpp"
#include "ddsl/planner.hpp"

namespace ddsl {

// Drops every represented match that maps a fragment edge onto a deleted
// data edge. With a store that is exact for d, the result is exact for the
// graph after the deletions.
inline MatchStore filter_removed(const MatchStore& store, const std::set<Edge>& deleted) {
  MatchStore out;
  out.frag = store.frag;
  for (const CompressedMatch& cm : store.records)
    if (auto kept = trim_not_touching(cm, store.frag, deleted))
      out.records.push_back(std::move(*kept));
  return out;
}

// Partitions that can host a partner match of `unit` agreeing with the
// record on the key vertices. A key on the anchor pins the partition
// directly; otherwise the key images are unit neighbors of the anchor image,
// so the navigation bitmaps of the images narrow the search.
inline std::vector<PartitionId> route_match(const CompressedMatch& cm, const R1Unit& unit,
                                            const std::set<VertexId>& key,
                                            const NPStorage& storage) {
  if (key.empty()) throw DomainError("cannot route on an empty join key");
  std::map<VertexId, VertexId> images;
  for (VertexId v : key) {
    auto it = cm.skeleton.find(v);
    if (it == cm.skeleton.end())
      throw DomainError("join key vertex " + std::to_string(v) + " is not bound");
    images[v] = it->second;
  }
  if (images.count(unit.anchor)) return {storage.h(images.at(unit.anchor))};

  DynamicBitset acc = DynamicBitset::all_set(storage.m());
  for (const auto& [v, x] : images) {
    auto it = storage.nav_bitmaps.find(x);
    if (it == storage.nav_bitmaps.end())
      throw DomainError("no navigation bitmap for vertex " + std::to_string(x));
    acc &= it->second;
  }
  std::vector<PartitionId> out;
  for (std::uint32_t k = 0; k < storage.m(); ++k)
    if (acc.test(k)) out.push_back(k + 1);
  return out;
}

struct PatchSet {
  std::vector<MatchStore> partials;  // per pivot unit, deduplicated
  MatchStore merged;                 // their union: all matches using a new edge
};

// Deduplication across pivots: the i-th partial keeps only matches where no
// earlier unit touches an inserted edge, so a match using several new edges
// survives exactly at its first touching unit.
inline std::vector<MatchStore> dedup_partials(std::vector<MatchStore> partials,
                                              const Decomposition& decomp,
                                              const std::set<Edge>& added) {
  for (std::size_t i = 0; i < partials.size() && i < decomp.units.size(); ++i) {
    std::vector<CompressedMatch> kept;
    for (CompressedMatch& cm : partials[i].records) {
      std::optional<CompressedMatch> cur(std::move(cm));
      for (std::size_t j = 0; j < i && cur; ++j)
        cur = trim_not_touching(*cur, decomp.units[j].graph, added);
      if (cur) kept.push_back(std::move(*cur));
    }
    partials[i].records = std::move(kept);
  }
  return partials;
}

struct MaintainResult {
  MatchStore store;         // canonical full-pattern store over the updated graph
  NPStorage storage;        // updated partitions
  Graph graph;              // updated data graph
  UpdateCostReport np_cost;
  PatchSet patch;
  std::vector<EngineRound> rounds;
  CostReport total;
};

// Applies a batch to the storage and the match store without relisting from
// scratch. Survivors come from trimming the old store; new matches grow from
// the units that touch an inserted edge, one left-deep join chain per pivot
// unit, with navigation bitmaps routing each level to the partitions that
// can extend the record.
inline MaintainResult maintain(const MatchStore& old_store, const NPStorage& storage,
                               const Graph& d, const UpdateBatch& u, const Pattern& p,
                               const Decomposition& decomp, const ExecContext& ctx = {}) {
  if (!(old_store.frag == p.graph()))
    throw DomainError("store fragment does not match the pattern");
  Ord closed = transitive_closure(p.ord());
  const VertexCover& cover = decomp.cover;

  MaintainResult res;
  res.storage = update_np_storage(storage, d, u, &res.np_cost);
  res.graph = apply_update(d, u);
  res.rounds.push_back({"storage-update", "apply batch to partitions", res.np_cost.measured});
  const NPStorage& s2 = res.storage;
  const Graph& d2 = res.graph;

  // Survivors: trim deleted edges away, then inserted ones, so decompressing
  // against the updated graph cannot resurrect a combination through an
  // edge that did not exist before.
  MatchStore filtered;
  filtered.frag = old_store.frag;
  for (const CompressedMatch& cm : old_store.records) {
    auto kept = trim_not_touching(cm, old_store.frag, u.deletions);
    if (kept) kept = trim_not_touching(*kept, old_store.frag, u.additions);
    if (kept) filtered.records.push_back(std::move(*kept));
  }

  std::size_t t = decomp.units.size();
  if (t == 0) throw DomainError("empty decomposition");
  std::vector<LeftDeepPlan> plans = left_deep_trees(decomp);

  // Level 0: per pivot, the unit matches that use an inserted edge.
  std::vector<MatchStore> partials(t);
  EngineRound extract{"extract", "new unit matches", {}};
  extract.cost.map_in =
      s2.storage_units() + static_cast<std::uint64_t>(s2.m()) * 2 * u.size();
  for (std::size_t i = 0; i < t; ++i) {
    partials[i].frag = decomp.units[i].graph;
    std::vector<std::vector<CompressedMatch>> parts(s2.m());
    parallel_for(ctx, s2.m(), [&](std::size_t k) {
      parts[k] = new_unit_matches(decomp.units[i], s2.partitions[k], cover, closed,
                                  u.additions);
    });
    for (auto& chunk : parts)
      for (CompressedMatch& cm : chunk) partials[i].records.push_back(std::move(cm));
    std::sort(partials[i].records.begin(), partials[i].records.end());
    extract.cost.reduce_out += partials[i].units();
  }
  res.rounds.push_back(extract);

  // Levels 1..t-1 run in lockstep across the pivots: route each record,
  // list the partner unit with the key pinned, join record by record.
  for (std::size_t level = 1; level < t; ++level) {
    EngineRound round{"join", "patch level " + std::to_string(level), {}};
    for (std::size_t i = 0; i < t; ++i) {
      const LeftDeepPlan& plan = plans[i];
      const R1Unit& next = decomp.units[plan.order[level]];
      const std::set<VertexId>& key = plan.keys[level - 1];
      Graph joined = graph_union(partials[i].frag, next.graph);

      std::size_t n = partials[i].records.size();
      std::vector<std::vector<CompressedMatch>> slots(n);
      std::vector<std::uint64_t> routed(n, 0);
      parallel_for(ctx, n, [&](std::size_t r) {
        const CompressedMatch& cm = partials[i].records[r];
        Match bindings;
        for (VertexId v : key) bindings[v] = cm.skeleton.at(v);
        for (PartitionId k : route_match(cm, next, key, s2)) {
          routed[r] += cm.units();
          for (const CompressedMatch& partner :
               list_unit_compressed(next, s2.partition(k), cover, closed, bindings)) {
            if (auto j = cc_join(cm, partner, cover, joined, closed, d2))
              slots[r].push_back(std::move(*j));
          }
        }
      });

      MatchStore out;
      out.frag = joined;
      for (auto& slot : slots)
        for (CompressedMatch& cm : slot) out.records.push_back(std::move(cm));
      std::sort(out.records.begin(), out.records.end());

      round.cost.map_in += partials[i].units();
      for (std::uint64_t ru : routed) {
        round.cost.shuffle += ru;
        round.cost.reduce_in += ru;
      }
      round.cost.reduce_out += out.units();
      partials[i] = std::move(out);
    }
    res.rounds.push_back(round);
  }

  std::uint64_t patch_in = 0;
  for (const MatchStore& ps : partials) patch_in += ps.units();

  res.patch.partials = dedup_partials(std::move(partials), decomp, u.additions);
  res.patch.merged.frag = p.graph();
  for (const MatchStore& ps : res.patch.partials)
    for (const CompressedMatch& cm : ps.records) res.patch.merged.records.push_back(cm);
  std::sort(res.patch.merged.records.begin(), res.patch.merged.records.end());

  // Survivors and patch are disjoint by construction; one canonical rewrite
  // gives the final store (and keeps a no-op batch a byte-level no-op).
  MatchStore combined;
  combined.frag = p.graph();
  combined.records = filtered.records;
  for (const CompressedMatch& cm : res.patch.merged.records)
    combined.records.push_back(cm);
  EngineRound fin{"finalize", "merge survivors and patch", {}};
  fin.cost.map_in = old_store.units() + patch_in;
  res.store = detail::canonicalize(combined, cover, closed, d2);
  fin.cost.reduce_out = res.store.units();
  res.rounds.push_back(fin);

  for (const EngineRound& r : res.rounds) res.total += r.cost;
  return res;
}

}  // namespace ddsl
