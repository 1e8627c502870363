#include <catch2/catch_amalgamated.hpp>

#include <ddsl/ddsl.hpp>

#include <random>
#include <sstream>

#include "test_support.hpp"

using namespace ddsl;

namespace {

Graph demo_graph() {
  // triangle 1-2-3 plus the pendant edge 3-4
  return testsup::graph_from_edges({{1, 2}, {2, 3}, {1, 3}, {3, 4}});
}

}  // namespace

TEST_CASE("edges normalize their endpoints and reject self-loops") {
  Edge e(5, 2);
  REQUIRE(e.a == 2);
  REQUIRE(e.b == 5);
  REQUIRE(Edge(2, 5) == e);
  REQUIRE_THROWS_AS(Edge(3, 3), DomainError);
}

TEST_CASE("degree counts incident edges") {
  Graph g = demo_graph();
  REQUIRE(g.degree(3) == 3);
  REQUIRE(g.degree(4) == 1);

  Graph single = testsup::graph_from_edges({{1, 2}});
  REQUIRE(single.degree(1) == 1);

  Graph isolated;
  isolated.add_vertex(7);
  REQUIRE(isolated.degree(7) == 0);

  REQUIRE_THROWS_AS(g.degree(99), DomainError);
}

TEST_CASE("induced subgraph keeps exactly the inner edges") {
  Graph g = demo_graph();

  Graph tri = g.induced({1, 2, 3});
  REQUIRE(tri.edge_count() == 3);
  REQUIRE(tri.has_edge(1, 2));
  REQUIRE(tri.has_edge(2, 3));
  REQUIRE(tri.has_edge(1, 3));

  REQUIRE(g.induced(g.vertex_set()) == g);

  Graph sparse = g.induced({1, 4});
  REQUIRE(sparse.vertex_count() == 2);
  REQUIRE(sparse.edge_count() == 0);

  REQUIRE_THROWS_AS(g.induced({1, 99}), DomainError);
}

TEST_CASE("triangle counting matches the cubic oracle") {
  REQUIRE(count_triangles(demo_graph()) == 1);

  Graph k4 = testsup::graph_from_edges({{1, 2}, {1, 3}, {1, 4}, {2, 3}, {2, 4}, {3, 4}});
  REQUIRE(count_triangles(k4) == 4);

  Graph c4 = testsup::graph_from_edges({{1, 2}, {2, 3}, {3, 4}, {1, 4}});
  REQUIRE(count_triangles(c4) == 0);

  std::mt19937_64 rng(11);
  Graph big = testsup::er_graph(200, 0.05, rng);
  REQUIRE(count_triangles(big) == testsup::brute_triangles(big));
}

TEST_CASE("apply_update edits the edge set") {
  Graph g = testsup::graph_from_edges({{1, 2}});
  UpdateBatch add_one;
  add_one.additions.insert(Edge(2, 3));
  Graph g2 = apply_update(g, add_one);
  REQUIRE(g2.has_edge(1, 2));
  REQUIRE(g2.has_edge(2, 3));
  REQUIRE(g2.edge_count() == 2);

  Graph h = testsup::graph_from_edges({{1, 2}, {2, 3}});
  UpdateBatch swap;
  swap.deletions.insert(Edge(1, 2));
  swap.additions.insert(Edge(1, 3));
  Graph h2 = apply_update(h, swap);
  REQUIRE(h2.has_edge(2, 3));
  REQUIRE(h2.has_edge(1, 3));
  REQUIRE_FALSE(h2.has_edge(1, 2));

  REQUIRE(apply_update(g, UpdateBatch{}) == g);
}

TEST_CASE("apply_update keeps vertices that lose their last edge") {
  Graph g = testsup::graph_from_edges({{1, 2}, {2, 3}});
  UpdateBatch u;
  u.deletions.insert(Edge(1, 2));
  Graph g2 = apply_update(g, u);
  REQUIRE(g2.has_vertex(1));
  REQUIRE(g2.degree(1) == 0);
}

TEST_CASE("batch validation names the offending edge") {
  Graph g = testsup::graph_from_edges({{1, 2}});

  UpdateBatch dup;
  dup.additions.insert(Edge(1, 2));
  REQUIRE_THROWS_WITH(apply_update(g, dup), Catch::Matchers::ContainsSubstring("(1,2)"));

  UpdateBatch missing;
  missing.deletions.insert(Edge(4, 5));
  REQUIRE_THROWS_WITH(apply_update(g, missing),
                      Catch::Matchers::ContainsSubstring("(4,5)"));

  UpdateBatch both;
  both.additions.insert(Edge(1, 2));
  both.deletions.insert(Edge(1, 2));
  REQUIRE_THROWS_AS(apply_update(g, both), ConflictError);
}

TEST_CASE("applying the reversed batch restores the graph") {
  std::mt19937_64 rng(3);
  for (int round = 0; round < 20; ++round) {
    Graph g = testsup::er_graph(18, 0.2, rng);
    UpdateBatch u = testsup::random_batch(g, 4, 3, rng);
    UpdateBatch rev;
    rev.additions = u.deletions;
    rev.deletions = u.additions;
    Graph forth = apply_update(g, u);
    Graph back = apply_update(forth, rev);
    // New vertices introduced by the batch stay behind with degree zero.
    for (VertexId v : g.vertices()) {
      REQUIRE(back.has_vertex(v));
      REQUIRE(back.neighbors(v) == g.neighbors(v));
    }
    REQUIRE(back.edges() == g.edges());
  }
}

TEST_CASE("adjacency stays symmetric and handshake holds on random graphs") {
  std::mt19937_64 rng(17);
  for (int round = 0; round < 10; ++round) {
    Graph g = testsup::er_graph(30, 0.15, rng);
    std::size_t degsum = 0;
    for (VertexId v : g.vertices()) {
      degsum += g.degree(v);
      for (VertexId w : g.neighbors(v)) {
        REQUIRE(w != v);
        REQUIRE(g.neighbors(w).count(v) == 1);
      }
    }
    REQUIRE(degsum == 2 * g.edge_count());
  }
}

TEST_CASE("edge list parsing handles comments and merges duplicates") {
  std::istringstream in("# header\n1 2\n2 3   # inline\n\n1 2\n");
  Graph g = parse_edge_list(in);
  REQUIRE(g.edge_count() == 2);
  REQUIRE(g.has_edge(1, 2));
  REQUIRE(g.has_edge(2, 3));
}

TEST_CASE("edge list parse errors carry the line number") {
  {
    std::istringstream in("1 2\n3\n");
    REQUIRE_THROWS_WITH(parse_edge_list(in), Catch::Matchers::ContainsSubstring("line 2"));
  }
  {
    std::istringstream in("1 2 9\n");
    REQUIRE_THROWS_WITH(parse_edge_list(in), Catch::Matchers::ContainsSubstring("line 1"));
  }
  {
    std::istringstream in("1 2\n2 x\n");
    REQUIRE_THROWS_AS(parse_edge_list(in), ParseError);
  }
  {
    std::istringstream in("1 2\n\n7 7\n");
    REQUIRE_THROWS_WITH(parse_edge_list(in), Catch::Matchers::ContainsSubstring("line 3"));
  }
}

TEST_CASE("batch files accept + and - lines only") {
  std::istringstream in("# batch\n+ 2 5\n- 1 3\n");
  UpdateBatch u = parse_batch(in);
  REQUIRE(u.additions.count(Edge(2, 5)) == 1);
  REQUIRE(u.deletions.count(Edge(1, 3)) == 1);

  std::istringstream bad("~ 1 2\n");
  REQUIRE_THROWS_AS(parse_batch(bad), ParseError);

  std::istringstream twice("+ 1 2\n- 1 2\n");
  REQUIRE_THROWS_AS(parse_batch(twice), ParseError);
}

TEST_CASE("edge list writer round-trips") {
  std::mt19937_64 rng(5);
  Graph g = testsup::er_graph(25, 0.2, rng);
  std::ostringstream out;
  write_edge_list(out, g);
  std::istringstream in(out.str());
  REQUIRE(parse_edge_list(in).edges() == g.edges());
}
