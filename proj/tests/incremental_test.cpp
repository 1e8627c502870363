#include <catch2/catch_amalgamated.hpp>

#include <ddsl/ddsl.hpp>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "test_support.hpp"

using namespace ddsl;

namespace {

MatchStore exact_store(const Pattern& p, const Graph& d, const VertexCover& cover) {
  MatchStore s;
  s.frag = p.graph();
  s.records = compress(oracle_list(p, d), p.graph(), cover);
  return s;
}

bool unit_touches(const Match& m, const Graph& unit_graph, const std::set<Edge>& added) {
  for (const Edge& e : unit_graph.edges())
    if (added.count(Edge(m.at(e.a), m.at(e.b)))) return true;
  return false;
}

Pattern seven_path() {
  return Pattern::with_generated_order(
      testsup::graph_from_edges({{1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}}));
}

}  // namespace

TEST_CASE("trimming deleted edges leaves exactly the surviving matches") {
  std::mt19937_64 rng(131);
  Graph tri = testsup::graph_from_edges({{1, 2}, {1, 3}, {2, 3}});
  Pattern p = Pattern::with_generated_order(tri);
  VertexCover cover{1, 2};
  Ord closed = transitive_closure(p.ord());

  for (int round = 0; round < 8; ++round) {
    Graph d = testsup::er_graph(16, 0.3, rng);
    MatchStore store = exact_store(p, d, cover);

    UpdateBatch u = testsup::random_batch(d, 0, 3, rng);
    Graph d2 = apply_update(d, u);

    MatchStore kept = filter_removed(store, u.deletions);
    REQUIRE(testsup::decompress_store(kept, closed, d2) == oracle_list(p, d2));

    // no deletions means no change at all
    MatchStore same = filter_removed(store, {});
    REQUIRE(same.records == store.records);
  }

  // deleting every edge of the only triangle kills the whole store
  Graph d = testsup::graph_from_edges({{1, 2}, {2, 3}, {1, 3}, {3, 4}});
  MatchStore store = exact_store(p, d, cover);
  REQUIRE_FALSE(store.records.empty());
  MatchStore dead = filter_removed(store, {Edge(1, 2)});
  REQUIRE(testsup::decompress_store(dead, closed, apply_update(d, UpdateBatch{{}, {Edge(1, 2)}}))
              .empty());
}

TEST_CASE("routing pins the partition when the key holds the anchor") {
  std::mt19937_64 rng(137);
  Graph d = testsup::er_graph(20, 0.3, rng);
  PartitionFunction h{PartitionFunction::Kind::Hash, 17, 4};
  NPStorage storage = build_np_storage(d, h);

  R1Unit unit{testsup::graph_from_edges({{1, 2}}), 1};
  CompressedMatch cm;
  cm.skeleton = {{1, d.vertices().front()}};

  std::vector<PartitionId> where = route_match(cm, unit, {1}, storage);
  REQUIRE(where == std::vector<PartitionId>{h(d.vertices().front())});
}

TEST_CASE("bitmap routing never misses a partition that can extend a record") {
  std::mt19937_64 rng(139);
  Graph square = testsup::graph_from_edges({{1, 2}, {2, 3}, {3, 4}, {1, 4}});
  Pattern p = Pattern::with_generated_order(square);
  VertexCover cover = square.vertex_set();
  Decomposition decomp = decompose(p, cover);
  REQUIRE(decomp.units.size() == 2);
  Ord closed = transitive_closure(p.ord());

  for (int round = 0; round < 6; ++round) {
    Graph d = testsup::er_graph(18, 0.3, rng);
    PartitionFunction h{PartitionFunction::Kind::Hash, 19u + round, 4};
    NPStorage storage = build_np_storage(d, h);

    std::vector<LeftDeepPlan> plans = left_deep_trees(decomp);
    const LeftDeepPlan& plan = plans[0];
    const R1Unit& pivot = decomp.units[plan.order[0]];
    const R1Unit& next = decomp.units[plan.order[1]];
    const std::set<VertexId>& key = plan.keys[0];

    CostReport cost;
    std::vector<MatchStore> stores = run_leaves(storage, {pivot}, cover, closed, cost);
    for (const CompressedMatch& cm : stores[0].records) {
      std::set<PartitionId> routed_to;
      for (PartitionId k : route_match(cm, next, key, storage)) routed_to.insert(k);

      Match bindings;
      for (VertexId v : key) bindings[v] = cm.skeleton.at(v);
      for (PartitionId k = 1; k <= storage.m(); ++k) {
        std::vector<CompressedMatch> partners =
            list_unit_compressed(next, storage.partition(k), cover, closed, bindings);
        if (!partners.empty()) REQUIRE(routed_to.count(k) == 1);
      }
    }
  }
}

TEST_CASE("routing validates the key against the record and the bitmaps") {
  Graph d = testsup::graph_from_edges({{1, 2}, {2, 3}});
  PartitionFunction h{PartitionFunction::Kind::Mod, 0, 2};
  NPStorage storage = build_np_storage(d, h);
  R1Unit unit{testsup::graph_from_edges({{1, 2}}), 1};

  CompressedMatch cm;
  cm.skeleton = {{2, 1}};
  REQUIRE_THROWS_WITH(route_match(cm, unit, {}, storage),
                      Catch::Matchers::ContainsSubstring("empty join key"));
  REQUIRE_THROWS_WITH(route_match(cm, unit, {3}, storage),
                      Catch::Matchers::ContainsSubstring("not bound"));

  CompressedMatch ghost;
  ghost.skeleton = {{2, 999}};
  REQUIRE_THROWS_WITH(route_match(ghost, unit, {2}, storage),
                      Catch::Matchers::ContainsSubstring("no navigation bitmap"));
}

TEST_CASE("first-touch deduplication splits the patch without gaps or overlap") {
  std::mt19937_64 rng(149);
  Pattern p = seven_path();
  VertexCover cover{2, 3, 4, 5, 6};
  Decomposition decomp = decompose(p, cover);
  REQUIRE(decomp.units.size() == 3);
  Ord closed = transitive_closure(p.ord());

  for (int round = 0; round < 4; ++round) {
    Graph d = testsup::er_graph(16, 0.22, rng);
    UpdateBatch u = testsup::random_batch(d, 5, 0, rng);
    Graph d2 = apply_update(d, u);

    MatchStore canon = exact_store(p, d2, cover);
    std::vector<MatchStore> partials(decomp.units.size());
    for (std::size_t i = 0; i < decomp.units.size(); ++i) {
      partials[i].frag = p.graph();
      for (const CompressedMatch& cm : canon.records)
        for (CompressedMatch& piece :
             restrict_touching(cm, decomp.units[i].graph, u.additions))
          partials[i].records.push_back(std::move(piece));
    }

    std::vector<MatchStore> dedup = dedup_partials(partials, decomp, u.additions);

    std::vector<Match> all = oracle_list(p, d2);
    std::vector<std::vector<Match>> want(decomp.units.size());
    for (const Match& m : all) {
      for (std::size_t i = 0; i < decomp.units.size(); ++i) {
        if (unit_touches(m, decomp.units[i].graph, u.additions)) {
          want[i].push_back(m);
          break;
        }
      }
    }

    std::vector<Match> merged;
    for (std::size_t i = 0; i < dedup.size(); ++i) {
      std::vector<Match> got = testsup::decompress_store(dedup[i], closed, d2);
      REQUIRE(got == want[i]);
      merged.insert(merged.end(), got.begin(), got.end());
    }
    REQUIRE(testsup::sorted_matches(merged) == testsup::oracle_diff(p, d, d2));
  }
}

TEST_CASE("maintenance over one unit matches a relisting from scratch") {
  std::mt19937_64 rng(151);
  Graph tri = testsup::graph_from_edges({{1, 2}, {1, 3}, {2, 3}});
  Pattern p = Pattern::with_generated_order(tri);
  VertexCover cover{1, 2};
  Decomposition decomp = decompose(p, cover);
  REQUIRE(decomp.units.size() == 1);

  for (int round = 0; round < 6; ++round) {
    Graph d = testsup::er_graph(18, 0.28, rng);
    PartitionFunction h{PartitionFunction::Kind::Hash, 23u + round, round % 2 ? 1u : 4u};
    NPStorage storage = build_np_storage(d, h);
    MatchStore store = exact_store(p, d, cover);

    UpdateBatch u = testsup::random_batch(d, 4, 3, rng);
    MaintainResult res = maintain(store, storage, d, u, p, decomp);

    REQUIRE(res.store.records == exact_store(p, res.graph, cover).records);
    REQUIRE(testsup::storage_equal(res.storage, build_np_storage(res.graph, h)));
    REQUIRE(res.rounds.size() == 3);
    REQUIRE(res.rounds[0].kind == "storage-update");
    REQUIRE(res.rounds[1].kind == "extract");
    REQUIRE(res.rounds[2].kind == "finalize");
  }
}

TEST_CASE("maintenance chains navigation joins across all units") {
  std::mt19937_64 rng(157);
  Pattern p = seven_path();
  VertexCover cover{2, 3, 4, 5, 6};
  Decomposition decomp = decompose(p, cover);
  Ord closed = transitive_closure(p.ord());

  for (int round = 0; round < 4; ++round) {
    Graph d = testsup::er_graph(15, 0.22, rng);
    PartitionFunction h{PartitionFunction::Kind::Hash, 29u + round, 3};
    NPStorage storage = build_np_storage(d, h);
    MatchStore store = exact_store(p, d, cover);

    UpdateBatch u = testsup::random_batch(d, 4, 2, rng);
    MaintainResult res = maintain(store, storage, d, u, p, decomp);

    REQUIRE(res.store.records == exact_store(p, res.graph, cover).records);
    REQUIRE(res.rounds.size() == 5);  // update, extract, two join levels, finalize
    REQUIRE(res.rounds[2].kind == "join");
    REQUIRE(res.rounds[3].kind == "join");

    std::vector<Match> patch = testsup::decompress_store(res.patch.merged, closed, res.graph);
    REQUIRE(patch == testsup::oracle_diff(p, d, res.graph));
  }
}

TEST_CASE("maintenance on a two-unit square agrees with scratch under churn") {
  std::mt19937_64 rng(163);
  Graph square = testsup::graph_from_edges({{1, 2}, {2, 3}, {3, 4}, {1, 4}});
  Pattern p = Pattern::with_generated_order(square);
  VertexCover cover = square.vertex_set();
  Decomposition decomp = decompose(p, cover);

  Graph d = testsup::er_graph(16, 0.3, rng);
  PartitionFunction h{PartitionFunction::Kind::Mod, 0, 4};
  NPStorage storage = build_np_storage(d, h);
  MatchStore store = exact_store(p, d, cover);

  // several consecutive batches, each maintained on top of the previous state
  for (int step = 0; step < 5; ++step) {
    UpdateBatch u = step % 2 ? testsup::random_batch(d, 0, 3, rng)
                             : testsup::random_batch(d, 5, 2, rng);
    MaintainResult res = maintain(store, storage, d, u, p, decomp);

    REQUIRE(res.store.records == exact_store(p, res.graph, cover).records);
    store = std::move(res.store);
    storage = std::move(res.storage);
    d = std::move(res.graph);
  }
}

TEST_CASE("an empty batch is a byte-level no-op") {
  std::mt19937_64 rng(167);
  Graph square = testsup::graph_from_edges({{1, 2}, {2, 3}, {3, 4}, {1, 4}});
  Pattern p = Pattern::with_generated_order(square);
  VertexCover cover = square.vertex_set();
  Decomposition decomp = decompose(p, cover);

  Graph d = testsup::er_graph(14, 0.3, rng);
  PartitionFunction h{PartitionFunction::Kind::Hash, 31, 2};
  NPStorage storage = build_np_storage(d, h);
  MatchStore store = exact_store(p, d, cover);

  MaintainResult res = maintain(store, storage, d, UpdateBatch{}, p, decomp);
  REQUIRE(res.store.records == store.records);
  REQUIRE(testsup::storage_equal(res.storage, storage));
  REQUIRE(res.patch.merged.records.empty());
}

TEST_CASE("deleting everything empties the store") {
  Graph d = testsup::graph_from_edges({{1, 2}, {1, 3}, {2, 3}});
  Pattern p = Pattern::with_generated_order(d);
  VertexCover cover{1, 2};
  Decomposition decomp = decompose(p, cover);
  PartitionFunction h{PartitionFunction::Kind::Mod, 0, 2};
  NPStorage storage = build_np_storage(d, h);
  MatchStore store = exact_store(p, d, cover);
  REQUIRE_FALSE(store.records.empty());

  UpdateBatch wipe;
  for (const Edge& e : d.edges()) wipe.deletions.insert(e);
  MaintainResult res = maintain(store, storage, d, wipe, p, decomp);
  REQUIRE(res.store.records.empty());
  REQUIRE(res.graph.edge_count() == 0);
}

TEST_CASE("maintenance rejects mismatched inputs") {
  Graph tri = testsup::graph_from_edges({{1, 2}, {1, 3}, {2, 3}});
  Graph square = testsup::graph_from_edges({{1, 2}, {2, 3}, {3, 4}, {1, 4}});
  Pattern p = Pattern::with_generated_order(square);
  Decomposition decomp = decompose(p, square.vertex_set());
  PartitionFunction h{PartitionFunction::Kind::Mod, 0, 2};
  Graph d = testsup::graph_from_edges({{5, 6}, {6, 7}});
  NPStorage storage = build_np_storage(d, h);

  MatchStore wrong;
  wrong.frag = tri;
  REQUIRE_THROWS_WITH(maintain(wrong, storage, d, UpdateBatch{}, p, decomp),
                      Catch::Matchers::ContainsSubstring("does not match the pattern"));

  MatchStore right;
  right.frag = square;
  Decomposition hollow;
  hollow.cover = square.vertex_set();
  REQUIRE_THROWS_WITH(maintain(right, storage, d, UpdateBatch{}, p, hollow),
                      Catch::Matchers::ContainsSubstring("empty decomposition"));
}
