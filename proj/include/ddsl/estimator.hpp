#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "ddsl/graph.hpp"
#include "ddsl/pattern.hpp"

namespace ddsl {

// Degree distribution of a data graph under the power-law random graph model:
// an edge (u, v) appears independently with probability deg(u) * deg(v) * rho,
// rho = 1 / (2 * |E|).
struct DegreeDistribution {
  std::map<std::uint64_t, double> probabilities;  // degree -> fraction of vertices
  std::size_t n = 0;
  std::uint64_t e = 0;
  double rho = 0.0;

  static DegreeDistribution from_degrees(const std::vector<std::uint64_t>& degrees) {
    if (degrees.empty()) throw DomainError("empty degree sequence");
    DegreeDistribution d;
    d.n = degrees.size();
    std::uint64_t total = 0;
    std::map<std::uint64_t, std::uint64_t> hist;
    for (auto w : degrees) {
      ++hist[w];
      total += w;
    }
    if (total == 0) throw DomainError("degree sequence has no edges");
    d.e = total / 2;
    d.rho = 1.0 / (2.0 * static_cast<double>(d.e));
    for (const auto& [w, c] : hist)
      d.probabilities[w] = static_cast<double>(c) / static_cast<double>(d.n);
    return d;
  }

  static DegreeDistribution from_graph(const Graph& g) {
    if (g.vertex_count() == 0) throw DomainError("empty graph has no distribution");
    std::vector<std::uint64_t> degs;
    degs.reserve(g.vertex_count());
    for (VertexId v : g.vertices()) degs.push_back(g.degree(v));
    DegreeDistribution d = from_degrees(degs);
    d.e = g.edge_count();
    d.rho = 1.0 / (2.0 * static_cast<double>(d.e));
    return d;
  }
};

// Sum over degrees w >= k of w^k * p_w. k = 0 degenerates to 1.
inline double tail_moment(const DegreeDistribution& dist, std::uint64_t k) {
  double sum = 0.0;
  for (const auto& [w, p] : dist.probabilities) {
    if (w < k) continue;
    sum += std::pow(static_cast<double>(w), static_cast<double>(k)) * p;
  }
  return sum;
}

struct EpsilonDetail {
  double value = 0.0;  // clamped to [0, 1]
  double raw = 0.0;
  bool clamped = false;
};

// Probability that a fixed injective assignment of the fragment's vertices
// realizes all fragment edges: rho^|E| times one degree tail moment per
// vertex. Edgeless fragments get 1 by convention.
inline EpsilonDetail epsilon_detail(const Graph& frag, const DegreeDistribution& dist) {
  EpsilonDetail out;
  double log_eps = 0.0;
  bool zero = false;
  std::size_t edges = frag.edge_count();
  if (edges > 0) {
    log_eps += static_cast<double>(edges) * std::log(dist.rho);
    for (VertexId v : frag.vertices()) {
      double m = tail_moment(dist, frag.degree(v));
      if (m <= 0.0) {
        zero = true;
        break;
      }
      log_eps += std::log(m);
    }
  }
  out.raw = zero ? 0.0 : std::exp(log_eps);
  out.value = std::min(1.0, out.raw);
  out.clamped = out.raw > 1.0;
  return out;
}

inline double epsilon(const Pattern& p, const DegreeDistribution& dist) {
  return epsilon_detail(p.graph(), dist).value;
}

// Expected match count: ordered injective assignments, times epsilon, times
// the fraction of automorphisms the order constraints leave admissible.
inline double expected_matches(const Graph& frag, const Ord& ord,
                               const DegreeDistribution& dist) {
  std::size_t k = frag.vertex_count();
  if (k == 0) throw DomainError("empty fragment");
  if (k > dist.n) return 0.0;
  EpsilonDetail eps = epsilon_detail(frag, dist);
  if (eps.value == 0.0) return 0.0;
  double log_assign = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    log_assign += std::log(static_cast<double>(dist.n - i));
  Ord local = restrict_ord(ord, frag.vertex_set());
  double auto_ord = static_cast<double>(detail::automorphisms_of(frag, &local).size());
  double auto_all = static_cast<double>(detail::automorphisms_of(frag, nullptr).size());
  return std::exp(log_assign + std::log(eps.value)) * auto_ord / auto_all;
}

inline double expected_matches(const Pattern& p, const DegreeDistribution& dist) {
  return expected_matches(p.graph(), p.ord(), dist);
}

struct EstimateReport {
  double epsilon = 0.0;
  double epsilon_raw = 0.0;
  bool epsilon_clamped = false;
  double expected = 0.0;
  std::map<VertexId, double> vertex_moments;  // pattern vertex -> tail moment
};

inline EstimateReport estimate(const Pattern& p, const DegreeDistribution& dist) {
  EstimateReport r;
  EpsilonDetail eps = epsilon_detail(p.graph(), dist);
  r.epsilon = eps.value;
  r.epsilon_raw = eps.raw;
  r.epsilon_clamped = eps.clamped;
  r.expected = expected_matches(p, dist);
  for (VertexId v : p.vertices())
    r.vertex_moments[v] = tail_moment(dist, p.graph().degree(v));
  return r;
}

// Samples a graph from the model for a target degree sequence. Vertex ids are
// 0..n-1. The model allows self-loops; draws for them are made and the loops
// dropped, so the returned graph is simple.
inline Graph sample_pr_graph(const std::vector<std::uint64_t>& degrees,
                             std::mt19937_64& rng) {
  DegreeDistribution dist = DegreeDistribution::from_degrees(degrees);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  Graph g;
  std::size_t n = degrees.size();
  for (std::size_t i = 0; i < n; ++i) g.add_vertex(i);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double p = static_cast<double>(degrees[i]) * static_cast<double>(degrees[j]) *
                 dist.rho;
      bool hit = coin(rng) < std::min(1.0, p);
      if (hit && i != j) g.add_edge(i, j);
    }
  }
  return g;
}

}  // namespace ddsl
