#include <catch2/catch_amalgamated.hpp>

#include <ddsl/ddsl.hpp>

#include <cmath>
#include <random>

#include "test_support.hpp"

using namespace ddsl;

namespace {

DegreeDistribution three_regular_10() {
  return DegreeDistribution::from_degrees(std::vector<std::uint64_t>(10, 3));
}

// Linear-domain recomputation of the expected match count, kept deliberately
// naive: falling factorial times edge probability times the admissible
// fraction of automorphisms.
double expected_by_hand(const Graph& frag, const Ord& ord, const DegreeDistribution& dist) {
  std::size_t k = frag.vertex_count();
  if (k > dist.n) return 0.0;
  double eps = 1.0;
  if (frag.edge_count() > 0) {
    eps = std::pow(dist.rho, static_cast<double>(frag.edge_count()));
    for (VertexId v : frag.vertices()) eps *= tail_moment(dist, frag.degree(v));
    eps = std::min(1.0, eps);
  }
  double assignments = 1.0;
  for (std::size_t i = 0; i < k; ++i) assignments *= static_cast<double>(dist.n - i);
  Ord local = restrict_ord(ord, frag.vertex_set());
  double with_ord = static_cast<double>(enumerate_automorphisms(frag, local, true).size());
  double without = static_cast<double>(enumerate_automorphisms(frag, local, false).size());
  return assignments * eps * with_ord / without;
}

}  // namespace

TEST_CASE("degree distributions normalize counts and pin rho") {
  DegreeDistribution d = three_regular_10();
  REQUIRE(d.n == 10);
  REQUIRE(d.e == 15);
  REQUIRE(d.rho == Catch::Approx(1.0 / 30.0));
  REQUIRE(d.probabilities.at(3) == 1.0);

  Graph g = testsup::graph_from_edges({{1, 2}, {2, 3}, {1, 3}, {3, 4}});
  DegreeDistribution fg = DegreeDistribution::from_graph(g);
  REQUIRE(fg.n == 4);
  REQUIRE(fg.e == g.edge_count());
  REQUIRE(fg.rho == Catch::Approx(1.0 / 8.0));
  REQUIRE(fg.probabilities.at(1) == Catch::Approx(0.25));
  REQUIRE(fg.probabilities.at(2) == Catch::Approx(0.5));
  REQUIRE(fg.probabilities.at(3) == Catch::Approx(0.25));

  REQUIRE_THROWS_AS(DegreeDistribution::from_degrees({}), DomainError);
  REQUIRE_THROWS_AS(DegreeDistribution::from_degrees({0, 0}), DomainError);
  REQUIRE_THROWS_AS(DegreeDistribution::from_graph(Graph{}), DomainError);
}

TEST_CASE("tail moments sum w^k over degrees at least k") {
  DegreeDistribution d = three_regular_10();
  REQUIRE(tail_moment(d, 0) == Catch::Approx(1.0));
  REQUIRE(tail_moment(d, 1) == Catch::Approx(3.0));
  REQUIRE(tail_moment(d, 2) == Catch::Approx(9.0));
  REQUIRE(tail_moment(d, 4) == 0.0);

  DegreeDistribution mixed = DegreeDistribution::from_degrees({1, 1, 4});
  // only the degree-4 vertex clears the k=2 bar: 16 * (1/3)
  REQUIRE(tail_moment(mixed, 2) == Catch::Approx(16.0 / 3.0));
}

TEST_CASE("edge probability of a triangle on a 3-regular sketch") {
  Pattern tri = Pattern::with_generated_order(
      testsup::graph_from_edges({{1, 2}, {1, 3}, {2, 3}}));
  DegreeDistribution d = three_regular_10();
  REQUIRE(epsilon(tri, d) == Catch::Approx(0.027));

  EstimateReport r = estimate(tri, d);
  REQUIRE(r.epsilon == Catch::Approx(0.027));
  REQUIRE_FALSE(r.epsilon_clamped);
  REQUIRE(r.expected == Catch::Approx(10.0 * 9.0 * 8.0 * 0.027 / 6.0));
  REQUIRE(r.vertex_moments.size() == 3);
  for (const auto& [v, m] : r.vertex_moments) REQUIRE(m == Catch::Approx(9.0));
}

TEST_CASE("edgeless fragments hit with probability one") {
  Graph lone;
  lone.add_vertex(1);
  DegreeDistribution d = three_regular_10();
  REQUIRE(epsilon_detail(lone, d).value == 1.0);
  REQUIRE(expected_matches(lone, Ord{}, d) == Catch::Approx(10.0));

  Graph pair;
  pair.add_vertex(1);
  pair.add_vertex(2);
  REQUIRE(expected_matches(pair, Ord{}, d) == Catch::Approx(90.0));
  REQUIRE(expected_matches(pair, Ord{{1, 2}}, d) == Catch::Approx(45.0));
}

TEST_CASE("hub-heavy sketches clamp the probability at one") {
  DegreeDistribution d = DegreeDistribution::from_degrees({10, 10});
  Graph edge = testsup::graph_from_edges({{1, 2}});
  EpsilonDetail eps = epsilon_detail(edge, d);
  REQUIRE(eps.raw == Catch::Approx(5.0));
  REQUIRE(eps.value == 1.0);
  REQUIRE(eps.clamped);

  REQUIRE(expected_matches(edge, Ord{{1, 2}}, d) == Catch::Approx(1.0));
}

TEST_CASE("order constraints scale the estimate by the admissible fraction") {
  DegreeDistribution d = three_regular_10();
  for (const testsup::CorpusEntry& entry : testsup::corpus()) {
    Pattern p = Pattern::with_generated_order(entry.graph);
    double with_ord = expected_matches(p.graph(), p.ord(), d);
    double free = expected_matches(p.graph(), Ord{}, d);
    double autos = static_cast<double>(enumerate_automorphisms(p.graph(), Ord{}, false).size());
    REQUIRE(with_ord * autos == Catch::Approx(free).margin(1e-9));
  }
}

TEST_CASE("log-domain evaluation agrees with the naive formula") {
  std::mt19937_64 rng(53);
  for (int round = 0; round < 6; ++round) {
    Graph host = round % 2 ? testsup::er_graph(60, 0.08, rng)
                           : testsup::pr_graph_small(80, rng);
    DegreeDistribution dist = DegreeDistribution::from_graph(host);
    for (const testsup::CorpusEntry& entry : testsup::corpus()) {
      Pattern p = Pattern::with_generated_order(entry.graph);
      double got = expected_matches(p, dist);
      double want = expected_by_hand(p.graph(), p.ord(), dist);
      REQUIRE(got == Catch::Approx(want).epsilon(1e-9));
    }
  }
}

TEST_CASE("fragments larger than the sketch population expect nothing") {
  DegreeDistribution tiny = DegreeDistribution::from_degrees({1, 1});
  Graph tri = testsup::graph_from_edges({{1, 2}, {1, 3}, {2, 3}});
  REQUIRE(expected_matches(tri, Ord{}, tiny) == 0.0);
  REQUIRE_THROWS_AS(expected_matches(Graph{}, Ord{}, tiny), DomainError);
}

TEST_CASE("model sampling is deterministic per seed and yields simple graphs") {
  std::vector<std::uint64_t> degrees(40, 2);
  degrees[0] = degrees[1] = 8;

  std::mt19937_64 a(123), b(123), c(321);
  Graph g1 = sample_pr_graph(degrees, a);
  Graph g2 = sample_pr_graph(degrees, b);
  Graph g3 = sample_pr_graph(degrees, c);
  REQUIRE(g1 == g2);
  REQUIRE_FALSE(g1 == g3);

  REQUIRE(g1.vertex_count() == degrees.size());
  for (VertexId v : g1.vertices()) {
    REQUIRE(v < degrees.size());
    REQUIRE(g1.neighbors(v).count(v) == 0);
  }
}

TEST_CASE("sampled edge totals track the degree sequence") {
  // target |E| is half the degree sum; the spread over seeds should be modest
  std::vector<std::uint64_t> degrees(100, 3);
  double target = 150.0;
  double sum = 0.0;
  std::mt19937_64 rng(57);
  const int reps = 30;
  for (int i = 0; i < reps; ++i) sum += static_cast<double>(sample_pr_graph(degrees, rng).edge_count());
  double mean = sum / reps;
  REQUIRE(mean > target * 0.8);
  REQUIRE(mean < target * 1.2);
}
