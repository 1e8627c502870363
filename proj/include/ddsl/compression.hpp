#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ddsl/graph.hpp"
#include "ddsl/pattern.hpp"

namespace ddsl {

// Plain match: pattern vertex -> data vertex, injective, edge and order
// preserving. Map order doubles as the output column order.
using Match = std::map<VertexId, VertexId>;

// One compressed record: a fixed skeleton over the covered vertices of a
// fragment and an independent candidate set per remaining vertex. The plain
// matches it stands for are the candidate products that survive the
// decompression checks.
struct CompressedMatch {
  std::map<VertexId, VertexId> skeleton;
  std::map<VertexId, std::vector<VertexId>> candidates;  // sorted, non-empty

  std::uint64_t units() const {
    std::uint64_t u = skeleton.size();
    for (const auto& [_, c] : candidates) u += c.size();
    return u;
  }

  auto operator<=>(const CompressedMatch&) const = default;
};

inline std::map<VertexId, VertexId> skeleton_of(const Match& m, const VertexCover& cover) {
  std::map<VertexId, VertexId> s;
  for (const auto& [v, u] : m)
    if (cover.count(v)) s.emplace(v, u);
  return s;
}

// Groups matches of one fragment by skeleton and collects per-vertex
// candidate sets. Exact only when each skeleton group is closed under the
// decompression checks, which holds for complete listings.
inline std::vector<CompressedMatch> compress(const std::vector<Match>& matches,
                                             const Graph& frag, const VertexCover& cover) {
  auto fverts = frag.vertex_set();
  VertexCover slice;
  for (VertexId v : cover)
    if (fverts.count(v)) slice.insert(v);
  for (const Edge& e : frag.edges())
    if (!slice.count(e.a) && !slice.count(e.b))
      throw DomainError("cover does not cover the fragment");
  std::map<std::map<VertexId, VertexId>, std::map<VertexId, std::set<VertexId>>> groups;
  for (const Match& m : matches) {
    if (m.size() != fverts.size())
      throw DomainError("match does not span the fragment");
    auto& cand = groups[skeleton_of(m, slice)];
    for (const auto& [v, u] : m)
      if (!slice.count(v)) cand[v].insert(u);
  }
  std::vector<CompressedMatch> out;
  out.reserve(groups.size());
  for (auto& [sk, cand] : groups) {
    CompressedMatch cm;
    cm.skeleton = sk;
    for (auto& [v, us] : cand) cm.candidates[v] = {us.begin(), us.end()};
    out.push_back(std::move(cm));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Expands one record into the plain matches it represents: every candidate
// combination that is injective, respects the order constraints, and maps
// each fragment edge onto an edge of d.
inline std::vector<Match> decompress(const CompressedMatch& cm, const Graph& frag,
                                     const Ord& ord, const Graph& d) {
  std::vector<VertexId> comp;
  for (const auto& [v, _] : cm.candidates) comp.push_back(v);
  Ord local = restrict_ord(ord, frag.vertex_set());
  std::vector<Edge> edges = frag.edges();

  std::vector<Match> out;
  Match cur;
  for (const auto& [v, u] : cm.skeleton) cur[v] = u;

  auto valid = [&](const Match& m) {
    std::set<VertexId> images;
    for (const auto& [_, u] : m)
      if (!images.insert(u).second) return false;
    for (const auto& [a, b] : local)
      if (!(m.at(a) < m.at(b))) return false;
    for (const Edge& e : edges)
      if (!d.has_edge(m.at(e.a), m.at(e.b))) return false;
    return true;
  };

  auto rec = [&](auto&& self, std::size_t i) -> void {
    if (i == comp.size()) {
      if (valid(cur)) out.push_back(cur);
      return;
    }
    for (VertexId u : cm.candidates.at(comp[i])) {
      cur[comp[i]] = u;
      self(self, i + 1);
    }
    cur.erase(comp[i]);
  };
  rec(rec, 0);
  std::sort(out.begin(), out.end());
  return out;
}

// Guaranteed lower bound on the compression ratio, from the match count of
// the pattern and of its cover-induced fragment. Zero matches give 0 by
// convention.
inline double r_lower(const Graph& p, const VertexCover& cover, double m_p,
                      double m_cover) {
  if (!is_vertex_cover(p, cover)) throw DomainError("not a vertex cover");
  if (m_p < 0 || m_cover < 0) throw DomainError("negative match count");
  if (m_cover < m_p) throw DomainError("cover fragment count below pattern count");
  if (m_p == 0.0) return 0.0;
  double vp = static_cast<double>(p.vertex_count());
  double vc = static_cast<double>(cover.size());
  return vp * m_p / (vp * m_p + vc * (m_cover - m_p));
}

// CC-join of two compressed matches whose fragments overlap on covered
// vertices. The skeletons must agree on the shared covered vertices; shared
// compressed vertices intersect their candidate sets; each candidate is then
// checked against the skeleton (adjacency for joined-fragment edges,
// distinctness, order constraints). Pairwise constraints between compressed
// vertices wait for decompression. Returns nullopt when the skeleton union is
// invalid or a candidate set empties.
inline std::optional<CompressedMatch> cc_join(const CompressedMatch& f1,
                                              const CompressedMatch& f2,
                                              [[maybe_unused]] const VertexCover& cover,
                                              const Graph& joined, const Ord& ord,
                                              const Graph& d) {
  CompressedMatch out;
  out.skeleton = f1.skeleton;
  for (const auto& [v, u] : f2.skeleton) {
    auto it = out.skeleton.find(v);
    if (it != out.skeleton.end()) {
      if (it->second != u) return std::nullopt;
    } else {
      out.skeleton.emplace(v, u);
    }
  }

  std::set<VertexId> images;
  for (const auto& [_, u] : out.skeleton)
    if (!images.insert(u).second) return std::nullopt;
  Ord local = restrict_ord(ord, joined.vertex_set());
  for (const auto& [a, b] : local) {
    auto ia = out.skeleton.find(a), ib = out.skeleton.find(b);
    if (ia != out.skeleton.end() && ib != out.skeleton.end() &&
        !(ia->second < ib->second))
      return std::nullopt;
  }

  std::set<VertexId> comp;
  for (const auto& [v, _] : f1.candidates) comp.insert(v);
  for (const auto& [v, _] : f2.candidates) comp.insert(v);

  for (VertexId v : comp) {
    std::vector<VertexId> cand;
    auto i1 = f1.candidates.find(v), i2 = f2.candidates.find(v);
    if (i1 != f1.candidates.end() && i2 != f2.candidates.end()) {
      std::set_intersection(i1->second.begin(), i1->second.end(), i2->second.begin(),
                            i2->second.end(), std::back_inserter(cand));
    } else {
      cand = i1 != f1.candidates.end() ? i1->second : i2->second;
    }

    std::vector<VertexId> kept;
    for (VertexId u : cand) {
      if (images.count(u)) continue;
      bool ok = true;
      for (VertexId w : joined.neighbors(v)) {
        auto it = out.skeleton.find(w);
        if (it != out.skeleton.end() && !d.has_edge(u, it->second)) {
          ok = false;
          break;
        }
      }
      if (ok) {
        for (const auto& [a, b] : local) {
          if (a == v) {
            auto it = out.skeleton.find(b);
            if (it != out.skeleton.end() && !(u < it->second)) ok = false;
          } else if (b == v) {
            auto it = out.skeleton.find(a);
            if (it != out.skeleton.end() && !(it->second < u)) ok = false;
          }
          if (!ok) break;
        }
      }
      if (ok) kept.push_back(u);
    }
    if (kept.empty()) return std::nullopt;
    out.candidates[v] = std::move(kept);
  }
  return out;
}

// Keeps only the plain matches that do NOT map any `frag` edge into
// `forbidden`. A skeleton hit drops the whole record; otherwise candidates
// hitting a forbidden edge against the skeleton are trimmed. Exact because a
// match avoids the set iff every coordinate does.
inline std::optional<CompressedMatch> trim_not_touching(CompressedMatch cm,
                                                        const Graph& frag,
                                                        const std::set<Edge>& forbidden) {
  if (forbidden.empty()) return cm;
  for (const Edge& e : frag.edges()) {
    auto ia = cm.skeleton.find(e.a), ib = cm.skeleton.find(e.b);
    if (ia != cm.skeleton.end() && ib != cm.skeleton.end() &&
        ia->second != ib->second && forbidden.count(Edge(ia->second, ib->second)))
      return std::nullopt;
  }
  for (auto& [v, cand] : cm.candidates) {
    if (!frag.has_vertex(v)) continue;
    std::vector<VertexId> kept;
    for (VertexId u : cand) {
      bool hit = false;
      for (VertexId w : frag.neighbors(v)) {
        auto it = cm.skeleton.find(w);
        if (it == cm.skeleton.end() || it->second == u) continue;
        if (forbidden.count(Edge(u, it->second))) {
          hit = true;
          break;
        }
      }
      if (!hit) kept.push_back(u);
    }
    if (kept.empty()) return std::nullopt;
    cand = std::move(kept);
  }
  return cm;
}

// Restricts a record to the plain matches that DO map at least one `frag`
// edge into `required`. Candidate sets cannot express "at least one
// coordinate hits", so the record splits into disjoint sub-records: the j-th
// pins coordinate j to its hitting candidates and the earlier coordinates to
// their non-hitting ones.
inline std::vector<CompressedMatch> restrict_touching(const CompressedMatch& cm,
                                                      const Graph& frag,
                                                      const std::set<Edge>& required) {
  if (required.empty()) return {};
  for (const Edge& e : frag.edges()) {
    auto ia = cm.skeleton.find(e.a), ib = cm.skeleton.find(e.b);
    if (ia != cm.skeleton.end() && ib != cm.skeleton.end() &&
        ia->second != ib->second && required.count(Edge(ia->second, ib->second)))
      return {cm};  // every represented match touches via the skeleton
  }

  std::vector<VertexId> coords;
  std::map<VertexId, std::vector<VertexId>> hitting, missing;
  for (const auto& [v, cand] : cm.candidates) {
    if (!frag.has_vertex(v)) continue;
    bool relevant = false;
    for (VertexId w : frag.neighbors(v))
      if (cm.skeleton.count(w)) relevant = true;
    if (!relevant) continue;
    coords.push_back(v);
    for (VertexId u : cand) {
      bool hit = false;
      for (VertexId w : frag.neighbors(v)) {
        auto it = cm.skeleton.find(w);
        if (it == cm.skeleton.end() || it->second == u) continue;
        if (required.count(Edge(u, it->second))) {
          hit = true;
          break;
        }
      }
      (hit ? hitting[v] : missing[v]).push_back(u);
    }
  }

  std::vector<CompressedMatch> out;
  for (std::size_t j = 0; j < coords.size(); ++j) {
    if (hitting[coords[j]].empty()) continue;
    CompressedMatch sub = cm;
    bool viable = true;
    for (std::size_t i = 0; i < j && viable; ++i) {
      if (missing[coords[i]].empty())
        viable = false;
      else
        sub.candidates[coords[i]] = missing[coords[i]];
    }
    if (!viable) continue;
    sub.candidates[coords[j]] = hitting[coords[j]];
    out.push_back(std::move(sub));
  }
  return out;
}

struct CompressionStats {
  std::uint64_t plain_units = 0;
  std::uint64_t stored_units = 0;
  double ratio = 0.0;  // plain / stored; 0 when both are empty
};

inline CompressionStats compression_stats(const std::vector<CompressedMatch>& records,
                                          std::size_t fragment_vertices,
                                          std::uint64_t match_count) {
  CompressionStats s;
  s.plain_units = static_cast<std::uint64_t>(fragment_vertices) * match_count;
  for (const auto& r : records) s.stored_units += r.units();
  s.ratio = s.stored_units == 0
                ? 0.0
                : static_cast<double>(s.plain_units) / static_cast<double>(s.stored_units);
  return s;
}

// One record per line:
//   skeleton: 1->4,2->7 | candidates: 3->{5,9};6->{2}
// A record with no compressed vertices writes "candidates: -".
inline std::string format_compressed(const CompressedMatch& cm) {
  std::ostringstream os;
  os << "skeleton: ";
  bool first = true;
  for (const auto& [v, u] : cm.skeleton) {
    if (!first) os << ',';
    os << v << "->" << u;
    first = false;
  }
  os << " | candidates: ";
  if (cm.candidates.empty()) {
    os << '-';
  } else {
    first = true;
    for (const auto& [v, cand] : cm.candidates) {
      if (!first) os << ';';
      os << v << "->{";
      for (std::size_t i = 0; i < cand.size(); ++i) {
        if (i) os << ',';
        os << cand[i];
      }
      os << '}';
      first = false;
    }
  }
  return os.str();
}

inline CompressedMatch parse_compressed(const std::string& line, std::size_t lineno = 0) {
  auto bar = line.find('|');
  auto skpos = line.find("skeleton:");
  auto cdpos = line.find("candidates:");
  if (bar == std::string::npos || skpos == std::string::npos ||
      cdpos == std::string::npos || cdpos < bar)
    throw ParseError("malformed compressed match", lineno);
  CompressedMatch cm;
  std::string sk = line.substr(skpos + 9, bar - (skpos + 9));
  std::istringstream ss(sk);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    auto arrow = tok.find("->");
    if (arrow == std::string::npos) {
      if (tok.find_first_not_of(" \t") == std::string::npos) continue;
      throw ParseError("malformed skeleton entry", lineno);
    }
    VertexId v, u;
    std::string lhs = tok.substr(0, arrow), rhs = tok.substr(arrow + 2);
    lhs.erase(std::remove_if(lhs.begin(), lhs.end(), ::isspace), lhs.end());
    rhs.erase(std::remove_if(rhs.begin(), rhs.end(), ::isspace), rhs.end());
    if (!detail::parse_vertex_token(lhs, v) || !detail::parse_vertex_token(rhs, u))
      throw ParseError("bad skeleton vertex id", lineno);
    cm.skeleton[v] = u;
  }
  std::string cd = line.substr(cdpos + 11);
  // Trim whitespace.
  auto b = cd.find_first_not_of(" \t");
  auto e = cd.find_last_not_of(" \t\r");
  cd = b == std::string::npos ? "" : cd.substr(b, e - b + 1);
  if (cd != "-" && !cd.empty()) {
    std::istringstream cs(cd);
    while (std::getline(cs, tok, ';')) {
      auto arrow = tok.find("->");
      auto open = tok.find('{');
      auto close = tok.find('}');
      if (arrow == std::string::npos || open == std::string::npos ||
          close == std::string::npos)
        throw ParseError("malformed candidate entry", lineno);
      std::string lhs = tok.substr(0, arrow);
      lhs.erase(std::remove_if(lhs.begin(), lhs.end(), ::isspace), lhs.end());
      VertexId v;
      if (!detail::parse_vertex_token(lhs, v))
        throw ParseError("bad candidate vertex id", lineno);
      std::vector<VertexId> cand;
      std::istringstream vs(tok.substr(open + 1, close - open - 1));
      std::string id;
      while (std::getline(vs, id, ',')) {
        id.erase(std::remove_if(id.begin(), id.end(), ::isspace), id.end());
        if (id.empty()) continue;
        VertexId u;
        if (!detail::parse_vertex_token(id, u))
          throw ParseError("bad candidate id", lineno);
        cand.push_back(u);
      }
      if (cand.empty()) throw ParseError("empty candidate set", lineno);
      std::sort(cand.begin(), cand.end());
      cm.candidates[v] = std::move(cand);
    }
  }
  return cm;
}

}  // namespace ddsl
