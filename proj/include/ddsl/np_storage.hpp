#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ddsl/bitset.hpp"
#include "ddsl/cost.hpp"
#include "ddsl/graph.hpp"

namespace ddsl {

using PartitionId = std::uint32_t;  // 1..m

// Deterministic vertex-to-partition map.
struct PartitionFunction {
  enum class Kind { Mod, Hash };
  Kind kind = Kind::Mod;
  std::uint64_t seed = 0;
  std::uint32_t m = 1;

  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  PartitionId operator()(VertexId v) const {
    if (m == 0) throw DomainError("partition count must be positive");
    if (kind == Kind::Mod) return static_cast<PartitionId>(v % m) + 1;
    return static_cast<PartitionId>(splitmix64(v ^ seed) % m) + 1;
  }

  nlohmann::json to_json() const {
    return {{"kind", kind == Kind::Mod ? "mod" : "hash"}, {"seed", seed}, {"m", m}};
  }

  static PartitionFunction from_json(const nlohmann::json& j) {
    PartitionFunction h;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "mod")
      h.kind = Kind::Mod;
    else if (kind == "hash")
      h.kind = Kind::Hash;
    else
      throw ParseError("unknown partitioner kind: " + kind);
    h.seed = j.at("seed").get<std::uint64_t>();
    h.m = j.at("m").get<std::uint32_t>();
    return h;
  }
};

struct NPPartition {
  PartitionId id = 1;
  Graph subgraph;
  std::set<VertexId> centers;
};

// Neighbor-preserved storage: partition k holds the union of the local
// (radius-1) graphs of the vertices hashed to k. Every center keeps its full
// neighborhood, so radius-1 listings never leave a partition.
struct NPStorage {
  PartitionFunction h;
  std::vector<NPPartition> partitions;
  std::map<VertexId, DynamicBitset> nav_bitmaps;  // bit k-1: a neighbor maps to k

  std::uint32_t m() const { return h.m; }

  const NPPartition& partition(PartitionId k) const {
    if (k == 0 || k > partitions.size()) throw DomainError("partition id out of range");
    return partitions[k - 1];
  }

  // Storage units: two ids per stored edge plus one per center.
  std::uint64_t storage_units() const {
    std::uint64_t units = 0;
    for (const auto& p : partitions)
      units += 2 * p.subgraph.edge_count() + p.centers.size();
    return units;
  }

  // The original graph is the union of the centers' local graphs.
  Graph reconstruct() const {
    Graph d;
    for (const auto& p : partitions) {
      for (VertexId c : p.centers) {
        d.add_vertex(c);
        for (VertexId x : p.subgraph.neighbors(c)) d.add_edge(c, x);
      }
    }
    return d;
  }
};

inline NPStorage build_np_storage(const Graph& d, const PartitionFunction& h) {
  if (h.m == 0) throw DomainError("partition count must be positive");
  NPStorage s;
  s.h = h;
  s.partitions.resize(h.m);
  for (std::uint32_t k = 0; k < h.m; ++k) s.partitions[k].id = k + 1;

  for (VertexId v : d.vertices()) {
    auto& p = s.partitions[h(v) - 1];
    p.centers.insert(v);
    p.subgraph.add_vertex(v);
  }

  // Edge (a, b) lands in the partitions of a, of b, and of every common
  // neighbor (closing the triangles of those centers' local graphs).
  for (const Edge& e : d.edges()) {
    std::set<PartitionId> targets{h(e.a), h(e.b)};
    const auto& na = d.neighbors(e.a);
    const auto& nb = d.neighbors(e.b);
    const auto& small = na.size() <= nb.size() ? na : nb;
    const auto& large = na.size() <= nb.size() ? nb : na;
    for (VertexId z : small)
      if (large.count(z)) targets.insert(h(z));
    for (PartitionId k : targets) s.partitions[k - 1].subgraph.add_edge(e.a, e.b);
  }

  for (VertexId v : d.vertices()) {
    DynamicBitset bits(h.m);
    for (VertexId w : d.neighbors(v)) bits.set(h(w) - 1);
    s.nav_bitmaps.emplace(v, std::move(bits));
  }
  return s;
}

// Two accountings of the storage overhead. `raw_extra` counts every duplicate
// copy of an edge across partitions. `closing_extra` counts only edges stored
// in a partition with neither endpoint hashed there; those exist purely to
// close a center's triangle, and their number is bounded by three per
// triangle of d.
struct ExtraEdgeReport {
  std::uint64_t stored_edges = 0;     // sum over partitions of |E(d_k)|
  std::uint64_t raw_extra = 0;        // stored_edges - |E(d)|
  std::uint64_t closing_extra = 0;
  std::uint64_t triangles = 0;
  std::uint64_t triangle_bound = 0;   // 3 * triangles
  std::uint64_t stored_bound = 0;     // m * |E(d)|
  std::uint64_t combined_bound = 0;   // min(3 * triangles, (m - 1) * |E(d)|)
};

inline ExtraEdgeReport extra_edge_cost(const NPStorage& s, const Graph& d) {
  ExtraEdgeReport r;
  for (const auto& p : s.partitions) {
    r.stored_edges += p.subgraph.edge_count();
    for (const Edge& e : p.subgraph.edges())
      if (s.h(e.a) != p.id && s.h(e.b) != p.id) ++r.closing_extra;
  }
  r.raw_extra = r.stored_edges - d.edge_count();
  r.triangles = count_triangles(d);
  r.triangle_bound = 3 * r.triangles;
  r.stored_bound = static_cast<std::uint64_t>(s.m()) * d.edge_count();
  std::uint64_t dup_bound = (static_cast<std::uint64_t>(s.m()) - 1) * d.edge_count();
  r.combined_bound = std::min(r.triangle_bound, dup_bound);
  return r;
}

// Post-update neighbor set of a center, computed from partition-local data.
inline std::set<VertexId> neighbor_set(const NPPartition& part, VertexId i,
                                       const UpdateBatch& u) {
  if (!part.centers.count(i))
    throw DomainError("vertex " + std::to_string(i) + " is not a center of partition " +
                      std::to_string(part.id));
  std::set<VertexId> out = part.subgraph.neighbors(i);
  for (const Edge& e : u.deletions) {
    if (e.a == i) out.erase(e.b);
    if (e.b == i) out.erase(e.a);
  }
  for (const Edge& e : u.additions) {
    if (e.a == i) out.insert(e.b);
    if (e.b == i) out.insert(e.a);
  }
  return out;
}

struct UpdateCostReport {
  CostReport measured;
  std::uint64_t neighbor_units = 0;   // sum of |N_d'(u)| over added-edge endpoints
  std::uint64_t shuffle_bound = 0;    // 3 * neighbor_units
  std::uint64_t total_bound = 0;
};

// One map/shuffle/reduce round. Mappers ship post-update neighbor sets across
// partitions for inserted cross-partition edges; reducers rebuild their
// partition from local edges, the batch, and the received sets. An edge
// survives in partition k iff an endpoint hashes to k or some center of k is
// adjacent in d' to both endpoints.
inline NPStorage update_np_storage(const NPStorage& s, const Graph& d,
                                   const UpdateBatch& u,
                                   UpdateCostReport* cost = nullptr) {
  validate_batch(d, u);
  const PartitionFunction& h = s.h;

  // Post-update neighbor sets for every batch-edge endpoint, from the
  // endpoint's own partition (new vertices start empty).
  std::map<VertexId, std::set<VertexId>> nset;
  for (VertexId v : u.touched_vertices()) {
    const NPPartition& part = s.partition(h(v));
    if (part.centers.count(v)) {
      nset[v] = neighbor_set(part, v, u);
    } else {
      std::set<VertexId> fresh;
      for (const Edge& e : u.additions) {
        if (e.a == v) fresh.insert(e.b);
        if (e.b == v) fresh.insert(e.a);
      }
      nset[v] = std::move(fresh);
    }
  }

  // Map phase: one message per (source vertex, remote partition) pair.
  std::map<PartitionId, std::map<VertexId, std::set<VertexId>>> inbox;
  std::uint64_t shuffle_units = 0;
  for (const Edge& e : u.additions) {
    PartitionId ka = h(e.a), kb = h(e.b);
    if (ka == kb) continue;
    if (inbox[kb].emplace(e.a, nset.at(e.a)).second)
      shuffle_units += 1 + nset.at(e.a).size();
    if (inbox[ka].emplace(e.b, nset.at(e.b)).second)
      shuffle_units += 1 + nset.at(e.b).size();
  }

  NPStorage out;
  out.h = h;
  out.partitions.resize(h.m);

  std::uint64_t batch_units = 2 * static_cast<std::uint64_t>(u.size());
  std::set<Edge> deleted = u.deletions;

  for (std::uint32_t idx = 0; idx < h.m; ++idx) {
    PartitionId k = idx + 1;
    const NPPartition& old = s.partitions[idx];
    NPPartition& np = out.partitions[idx];
    np.id = k;

    np.centers = old.centers;
    for (VertexId v : u.touched_vertices())
      if (h(v) == k) np.centers.insert(v);

    // Post-update adjacency of this partition's centers.
    std::map<VertexId, std::set<VertexId>> cadj;
    for (VertexId c : np.centers) {
      std::set<VertexId> nb;
      if (old.subgraph.has_vertex(c)) nb = old.subgraph.neighbors(c);
      for (const Edge& e : u.deletions) {
        if (e.a == c) nb.erase(e.b);
        if (e.b == c) nb.erase(e.a);
      }
      for (const Edge& e : u.additions) {
        if (e.a == c) nb.insert(e.b);
        if (e.b == c) nb.insert(e.a);
      }
      cadj[c] = std::move(nb);
    }

    // Candidate edges: surviving local edges, the inserted edges, and edges
    // derived from shipped neighbor sets. All lie in d'.
    std::set<Edge> candidates;
    for (const Edge& e : old.subgraph.edges())
      if (!deleted.count(e)) candidates.insert(e);
    for (const Edge& e : u.additions) candidates.insert(e);
    auto inbox_it = inbox.find(k);
    if (inbox_it != inbox.end())
      for (const auto& [x, nbrs] : inbox_it->second)
        for (VertexId y : nbrs) candidates.insert(Edge(x, y));

    // Which borders are adjacent to which centers after the update.
    std::map<VertexId, std::set<VertexId>> centers_at;
    for (const auto& [c, nb] : cadj)
      for (VertexId x : nb) centers_at[x].insert(c);

    for (VertexId c : np.centers) np.subgraph.add_vertex(c);
    for (const Edge& e : candidates) {
      bool keep = h(e.a) == k || h(e.b) == k;
      if (!keep) {
        auto ia = centers_at.find(e.a);
        auto ib = centers_at.find(e.b);
        if (ia != centers_at.end() && ib != centers_at.end()) {
          for (VertexId c : ia->second) {
            if (ib->second.count(c)) {
              keep = true;
              break;
            }
          }
        }
      }
      if (keep) np.subgraph.add_edge(e.a, e.b);
    }
  }

  // Navigation bitmaps: carry the untouched ones over, refresh endpoints of
  // batch edges from their own partition.
  out.nav_bitmaps = s.nav_bitmaps;
  for (VertexId v : u.touched_vertices()) {
    DynamicBitset bits(h.m);
    const NPPartition& home = out.partitions[h(v) - 1];
    if (home.subgraph.has_vertex(v))
      for (VertexId w : home.subgraph.neighbors(v)) bits.set(h(w) - 1);
    out.nav_bitmaps[v] = std::move(bits);
  }

  if (cost) {
    std::uint64_t s_phi = s.storage_units();
    std::uint64_t s_phi2 = out.storage_units();
    cost->measured.map_in = s_phi + static_cast<std::uint64_t>(h.m) * batch_units;
    cost->measured.shuffle = shuffle_units;
    cost->measured.reduce_in =
        s_phi + static_cast<std::uint64_t>(h.m) * batch_units + shuffle_units;
    cost->measured.reduce_out = s_phi2;
    cost->neighbor_units = 0;
    for (const Edge& e : u.additions)
      cost->neighbor_units += nset.at(e.a).size() + nset.at(e.b).size();
    cost->shuffle_bound = 3 * cost->neighbor_units;
    cost->total_bound = 2 * s_phi + 2 * static_cast<std::uint64_t>(h.m) * batch_units +
                        4 * cost->neighbor_units + s_phi2;
  }
  return out;
}

namespace detail {

inline void write_u64_le(std::ostream& os, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(buf, 8);
}

inline std::uint64_t read_u64_le(std::istream& is) {
  char buf[8];
  is.read(buf, 8);
  if (!is) throw ParseError("truncated binary record");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  return v;
}

}  // namespace detail

// Directory layout: meta.json, part-<k>.edges (one "centers ..." header line,
// then one edge per line), nav.bits (id + bitmap words, little endian).
inline void save_np_storage(const NPStorage& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Graph d = s.reconstruct();

  nlohmann::json meta;
  meta["partitioner"] = s.h.to_json();
  meta["m"] = s.m();
  meta["vertices"] = d.vertex_count();
  meta["edges"] = d.edge_count();
  {
    std::ofstream out(dir / "meta.json");
    if (!out) throw Error("cannot write " + (dir / "meta.json").string());
    out << meta.dump(2) << '\n';
  }

  for (const auto& p : s.partitions) {
    std::ofstream out(dir / ("part-" + std::to_string(p.id) + ".edges"));
    if (!out) throw Error("cannot write partition file");
    out << "centers";
    for (VertexId c : p.centers) out << ' ' << c;
    out << '\n';
    for (const Edge& e : p.subgraph.edges()) out << e.a << ' ' << e.b << '\n';
  }

  std::ofstream nav(dir / "nav.bits", std::ios::binary);
  if (!nav) throw Error("cannot write nav.bits");
  for (const auto& [v, bits] : s.nav_bitmaps) {
    detail::write_u64_le(nav, v);
    for (std::uint64_t w : bits.words()) detail::write_u64_le(nav, w);
  }
}

inline NPStorage load_np_storage(const std::filesystem::path& dir) {
  std::ifstream metain(dir / "meta.json");
  if (!metain) throw ParseError("cannot open " + (dir / "meta.json").string());
  nlohmann::json meta;
  std::uint64_t nvertices = 0;
  NPStorage s;
  try {
    meta = nlohmann::json::parse(metain);
    s.h = PartitionFunction::from_json(meta.at("partitioner"));
    nvertices = meta.at("vertices").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("bad storage metadata in " + (dir / "meta.json").string() +
                     ": " + e.what());
  }
  s.partitions.resize(s.h.m);

  for (std::uint32_t k = 1; k <= s.h.m; ++k) {
    auto path = dir / ("part-" + std::to_string(k) + ".edges");
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    NPPartition& p = s.partitions[k - 1];
    p.id = k;
    std::string line;
    if (!std::getline(in, line)) throw ParseError("missing centers header in " + path.string());
    std::istringstream hs(line);
    std::string tag;
    hs >> tag;
    if (tag != "centers") throw ParseError("bad centers header in " + path.string());
    std::string tok;
    while (hs >> tok) {
      VertexId v;
      if (!detail::parse_vertex_token(tok, v))
        throw ParseError("bad center id in " + path.string());
      p.centers.insert(v);
      p.subgraph.add_vertex(v);
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      std::istringstream ls(line);
      std::string ta, tb;
      if (!(ls >> ta)) continue;
      if (!(ls >> tb)) throw ParseError("expected two vertex ids", lineno);
      VertexId a, b;
      if (!detail::parse_vertex_token(ta, a) || !detail::parse_vertex_token(tb, b))
        throw ParseError("bad vertex id", lineno);
      p.subgraph.add_edge(a, b);
    }
  }

  std::ifstream nav(dir / "nav.bits", std::ios::binary);
  if (!nav) throw ParseError("cannot open " + (dir / "nav.bits").string());
  std::size_t words = (s.h.m + 63) / 64;
  for (std::uint64_t i = 0; i < nvertices; ++i) {
    VertexId v = detail::read_u64_le(nav);
    std::vector<std::uint64_t> ws(words);
    for (auto& w : ws) w = detail::read_u64_le(nav);
    s.nav_bitmaps.emplace(v, DynamicBitset::from_words(s.h.m, std::move(ws)));
  }
  return s;
}

}  // namespace ddsl
