#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ddsl/error.hpp"

namespace ddsl {

using VertexId = std::uint64_t;

// Undirected edge with normalized endpoint order (a < b).
struct Edge {
  VertexId a = 0;
  VertexId b = 0;

  Edge() = default;
  Edge(VertexId u, VertexId v) : a(std::min(u, v)), b(std::max(u, v)) {
    if (u == v) throw DomainError("self-loop edge (" + std::to_string(u) + ")");
  }

  auto operator<=>(const Edge&) const = default;
};

// Simple undirected graph. Adjacency keeps one entry per vertex, so isolated
// vertices survive edge deletions.
class Graph {
public:
  Graph() = default;

  void add_vertex(VertexId v) { adj_.try_emplace(v); }

  // Creates missing endpoints; inserting an existing edge is a no-op.
  void add_edge(VertexId u, VertexId v) {
    Edge e(u, v);
    auto& nu = adj_[e.a];
    adj_.try_emplace(e.b);
    if (nu.insert(e.b).second) {
      adj_[e.b].insert(e.a);
      ++edges_;
    }
  }

  void remove_edge(VertexId u, VertexId v) {
    Edge e(u, v);
    auto it = adj_.find(e.a);
    if (it == adj_.end() || it->second.erase(e.b) == 0)
      throw DomainError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                        ") not present");
    adj_[e.b].erase(e.a);
    --edges_;
  }

  bool has_vertex(VertexId v) const { return adj_.count(v) > 0; }

  bool has_edge(VertexId u, VertexId v) const {
    if (u == v) return false;
    auto it = adj_.find(u);
    return it != adj_.end() && it->second.count(v) > 0;
  }

  const std::set<VertexId>& neighbors(VertexId v) const {
    auto it = adj_.find(v);
    if (it == adj_.end())
      throw DomainError("unknown vertex " + std::to_string(v));
    return it->second;
  }

  std::size_t degree(VertexId v) const { return neighbors(v).size(); }

  std::size_t vertex_count() const { return adj_.size(); }
  std::size_t edge_count() const { return edges_; }

  std::vector<VertexId> vertices() const {
    std::vector<VertexId> out;
    out.reserve(adj_.size());
    for (const auto& [v, _] : adj_) out.push_back(v);
    return out;
  }

  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(edges_);
    for (const auto& [v, ns] : adj_)
      for (VertexId w : ns)
        if (v < w) out.emplace_back(v, w);
    return out;
  }

  std::set<VertexId> vertex_set() const {
    std::set<VertexId> out;
    for (const auto& [v, _] : adj_) out.insert(v);
    return out;
  }

  Graph induced(const std::set<VertexId>& keep) const {
    Graph g;
    for (VertexId v : keep) {
      if (!has_vertex(v))
        throw DomainError("induced subgraph on unknown vertex " + std::to_string(v));
      g.add_vertex(v);
    }
    for (VertexId v : keep)
      for (VertexId w : neighbors(v))
        if (v < w && keep.count(w)) g.add_edge(v, w);
    return g;
  }

  // Vacuously true for zero or one vertices.
  bool connected() const {
    if (adj_.size() <= 1) return true;
    std::set<VertexId> seen;
    std::vector<VertexId> stack{adj_.begin()->first};
    seen.insert(stack.back());
    while (!stack.empty()) {
      VertexId v = stack.back();
      stack.pop_back();
      for (VertexId w : adj_.at(v))
        if (seen.insert(w).second) stack.push_back(w);
    }
    return seen.size() == adj_.size();
  }

  bool operator==(const Graph&) const = default;

private:
  std::map<VertexId, std::set<VertexId>> adj_;
  std::size_t edges_ = 0;
};

// Union of vertex and edge sets.
inline Graph graph_union(const Graph& a, const Graph& b) {
  Graph g = a;
  for (VertexId v : b.vertices()) g.add_vertex(v);
  for (const Edge& e : b.edges()) g.add_edge(e.a, e.b);
  return g;
}

inline std::uint64_t max_degree(const Graph& g) {
  std::uint64_t d = 0;
  for (VertexId v : g.vertices()) d = std::max<std::uint64_t>(d, g.degree(v));
  return d;
}

// Exact triangle count via per-edge common-neighbor intersection.
inline std::uint64_t count_triangles(const Graph& g) {
  std::uint64_t total = 0;
  for (const Edge& e : g.edges()) {
    const auto& na = g.neighbors(e.a);
    const auto& nb = g.neighbors(e.b);
    const auto& small = na.size() <= nb.size() ? na : nb;
    const auto& large = na.size() <= nb.size() ? nb : na;
    for (VertexId w : small)
      if (large.count(w)) ++total;
  }
  return total / 3;
}

// Edge update batch: additions and deletions applied as one unit.
struct UpdateBatch {
  std::set<Edge> additions;
  std::set<Edge> deletions;

  std::size_t size() const { return additions.size() + deletions.size(); }
  bool empty() const { return additions.empty() && deletions.empty(); }

  // Vertices incident to any batch edge, with multiplicity one.
  std::set<VertexId> touched_vertices() const {
    std::set<VertexId> out;
    for (const Edge& e : additions) {
      out.insert(e.a);
      out.insert(e.b);
    }
    for (const Edge& e : deletions) {
      out.insert(e.a);
      out.insert(e.b);
    }
    return out;
  }
};

inline void validate_batch(const Graph& g, const UpdateBatch& u) {
  for (const Edge& e : u.deletions) {
    if (u.additions.count(e))
      throw ConflictError("edge (" + std::to_string(e.a) + "," + std::to_string(e.b) +
                          ") both added and deleted");
    if (!g.has_edge(e.a, e.b))
      throw ConflictError("deleted edge (" + std::to_string(e.a) + "," +
                          std::to_string(e.b) + ") not in graph");
  }
  for (const Edge& e : u.additions)
    if (g.has_edge(e.a, e.b))
      throw ConflictError("added edge (" + std::to_string(e.a) + "," +
                          std::to_string(e.b) + ") already in graph");
}

// Returns the updated graph. Endpoints of added edges are created; vertices
// left with degree zero by deletions are retained.
inline Graph apply_update(const Graph& g, const UpdateBatch& u) {
  validate_batch(g, u);
  Graph out = g;
  for (const Edge& e : u.deletions) out.remove_edge(e.a, e.b);
  for (const Edge& e : u.additions) out.add_edge(e.a, e.b);
  return out;
}

namespace detail {

inline bool parse_vertex_token(const std::string& tok, VertexId& out) {
  if (tok.empty()) return false;
  for (char c : tok)
    if (c < '0' || c > '9') return false;
  try {
    out = std::stoull(tok);
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

}  // namespace detail

// Whitespace-separated "u v" per line; '#' starts a comment; duplicate edges
// merge silently.
inline Graph parse_edge_list(std::istream& in) {
  Graph g;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string ta, tb, extra;
    if (!(ls >> ta)) continue;
    if (!(ls >> tb)) throw ParseError("expected two vertex ids", lineno);
    if (ls >> extra) throw ParseError("trailing tokens after edge", lineno);
    VertexId a, b;
    if (!detail::parse_vertex_token(ta, a) || !detail::parse_vertex_token(tb, b))
      throw ParseError("bad vertex id", lineno);
    if (a == b) throw ParseError("self-loop edge", lineno);
    g.add_edge(a, b);
  }
  return g;
}

inline Graph read_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open graph file: " + path);
  return parse_edge_list(in);
}

inline void write_edge_list(std::ostream& out, const Graph& g) {
  for (const Edge& e : g.edges()) out << e.a << ' ' << e.b << '\n';
}

// Lines "+ u v" or "- u v"; '#' comments allowed.
inline UpdateBatch parse_batch(std::istream& in) {
  UpdateBatch u;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string op, ta, tb, extra;
    if (!(ls >> op)) continue;
    if ((op != "+" && op != "-") || !(ls >> ta >> tb) || (ls >> extra))
      throw ParseError("expected '+ u v' or '- u v'", lineno);
    VertexId a, b;
    if (!detail::parse_vertex_token(ta, a) || !detail::parse_vertex_token(tb, b))
      throw ParseError("bad vertex id", lineno);
    if (a == b) throw ParseError("self-loop edge", lineno);
    Edge e(a, b);
    if (op == "+") {
      if (u.deletions.count(e)) throw ParseError("edge both added and deleted", lineno);
      u.additions.insert(e);
    } else {
      if (u.additions.count(e)) throw ParseError("edge both added and deleted", lineno);
      u.deletions.insert(e);
    }
  }
  return u;
}

inline UpdateBatch read_batch(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open batch file: " + path);
  return parse_batch(in);
}

}  // namespace ddsl
