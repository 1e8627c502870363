// Command line front end: build partitioned storage from an edge list, plan
// and run pattern listings against it, apply update batches, and verify
// outputs against a reference listing.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "ddsl/ddsl.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ddsl::Graph load_graph(const std::string& path) { return ddsl::read_edge_list(path); }

ddsl::Pattern load_pattern(const std::string& path) { return ddsl::read_pattern(path); }

ddsl::UpdateBatch load_batch(const std::string& path) { return ddsl::read_batch(path); }

json cost_json(const ddsl::CostReport& c) {
  return {{"map_in", c.map_in},
          {"shuffle", c.shuffle},
          {"reduce_in", c.reduce_in},
          {"reduce_out", c.reduce_out},
          {"total", c.total()}};
}

json rounds_json(const std::vector<ddsl::EngineRound>& rounds) {
  json arr = json::array();
  for (const auto& r : rounds)
    arr.push_back({{"kind", r.kind}, {"label", r.label}, {"cost", cost_json(r.cost)}});
  return arr;
}

json tree_json(const ddsl::JoinTree& tree) {
  json nodes = json::array();
  for (const auto& node : tree.nodes) {
    json n;
    n["fragment"] = ddsl::fragment_key(node.sub);
    n["size_estimate"] = node.size;
    if (node.unit) {
      n["anchor"] = node.unit->anchor;
    } else {
      n["left"] = node.left;
      n["right"] = node.right;
    }
    nodes.push_back(std::move(n));
  }
  return {{"nodes", nodes}, {"root", tree.root}, {"recursive_cost", tree.recursive_cost}};
}

void write_plain_matches(const std::string& path, const ddsl::Pattern& p,
                         const std::vector<ddsl::Match>& matches) {
  std::ofstream out(path);
  if (!out) throw ddsl::Error("cannot write " + path);
  out << "# columns:";
  for (ddsl::VertexId v : p.graph().vertices()) out << ' ' << v;
  out << '\n';
  for (const ddsl::Match& m : matches) {
    bool first = true;
    for (const auto& [_, image] : m) {
      if (!first) out << ' ';
      out << image;
      first = false;
    }
    out << '\n';
  }
}

void write_compressed_store(const std::string& path, const ddsl::VertexCover& cover,
                            const ddsl::MatchStore& store) {
  std::ofstream out(path);
  if (!out) throw ddsl::Error("cannot write " + path);
  out << "# cover:";
  for (ddsl::VertexId v : cover) out << ' ' << v;
  out << '\n';
  for (const ddsl::CompressedMatch& cm : store.records)
    out << ddsl::format_compressed(cm) << '\n';
}

struct StoreFile {
  std::optional<ddsl::VertexCover> cover;
  std::vector<ddsl::CompressedMatch> records;
};

StoreFile read_compressed_store(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ddsl::Error("cannot open match store " + path);
  StoreFile sf;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line);
      std::string hash, tag;
      hs >> hash >> tag;
      if (tag == "cover:") {
        ddsl::VertexCover cover;
        ddsl::VertexId v;
        while (hs >> v) cover.insert(v);
        sf.cover = cover;
      }
      continue;
    }
    sf.records.push_back(ddsl::parse_compressed(line, lineno));
  }
  return sf;
}

bool looks_compressed(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ddsl::Error("cannot open match file " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.find("cover:") != std::string::npos) return true;
      continue;
    }
    return line.find("skeleton:") != std::string::npos;
  }
  return false;
}

std::vector<ddsl::Match> read_plain_matches(const std::string& path,
                                            const ddsl::Pattern& p) {
  std::ifstream in(path);
  if (!in) throw ddsl::Error("cannot open match file " + path);
  std::vector<ddsl::VertexId> cols = p.graph().vertices();
  std::vector<ddsl::Match> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    ddsl::Match m;
    for (ddsl::VertexId v : cols) {
      ddsl::VertexId image;
      if (!(ls >> image))
        throw ddsl::ParseError("expected " + std::to_string(cols.size()) + " images",
                               lineno);
      m[v] = image;
    }
    ddsl::VertexId extra;
    if (ls >> extra) throw ddsl::ParseError("trailing values", lineno);
    out.push_back(std::move(m));
  }
  return out;
}

std::string match_to_string(const ddsl::Match& m) {
  std::string s;
  for (const auto& [v, image] : m) {
    if (!s.empty()) s += ' ';
    s += std::to_string(v) + "->" + std::to_string(image);
  }
  return s;
}

int cmd_build(const std::string& graph_path, const std::string& storage_dir,
              std::uint32_t parts, bool hash_partitioner, std::uint64_t seed) {
  ddsl::Graph d = load_graph(graph_path);
  ddsl::PartitionFunction h;
  h.kind = hash_partitioner ? ddsl::PartitionFunction::Kind::Hash
                            : ddsl::PartitionFunction::Kind::Mod;
  h.seed = seed;
  h.m = parts;
  ddsl::NPStorage storage = ddsl::build_np_storage(d, h);
  ddsl::save_np_storage(storage, storage_dir);
  ddsl::ExtraEdgeReport extra = ddsl::extra_edge_cost(storage, d);
  std::cerr << "built " << parts << " partitions: " << d.vertex_count() << " vertices, "
            << d.edge_count() << " edges, " << extra.stored_edges << " stored edges ("
            << extra.raw_extra << " duplicated, " << extra.closing_extra << " closing), "
            << storage.storage_units() << " units\n";
  return 0;
}

int cmd_plan(const std::string& pattern_path, const std::string& graph_path,
             double storage_units) {
  ddsl::Pattern p = load_pattern(pattern_path);
  ddsl::Graph d = load_graph(graph_path);
  auto dist = ddsl::DegreeDistribution::from_graph(d);
  ddsl::PlanResult res = ddsl::plan(p, dist, storage_units);
  json out;
  out["cover"] = res.cover;
  out["estimated_cost"] = res.est_cost;
  out["ratio_lower_bound"] = res.ratio_hat;
  out["expected_pattern_matches"] = res.m_p_hat;
  out["expected_cover_matches"] = res.m_c_hat;
  out["tree"] = tree_json(res.tree);
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_estimate(const std::string& pattern_path, const std::string& graph_path) {
  ddsl::Pattern p = load_pattern(pattern_path);
  ddsl::Graph d = load_graph(graph_path);
  auto dist = ddsl::DegreeDistribution::from_graph(d);
  ddsl::EstimateReport r = ddsl::estimate(p, dist);
  json out;
  out["vertices"] = dist.n;
  out["edges"] = dist.e;
  out["rho"] = dist.rho;
  out["epsilon"] = r.epsilon;
  out["epsilon_raw"] = r.epsilon_raw;
  out["epsilon_clamped"] = r.epsilon_clamped;
  out["expected_matches"] = r.expected;
  json moments = json::object();
  for (const auto& [v, t] : r.vertex_moments) moments[std::to_string(v)] = t;
  out["vertex_tail_moments"] = moments;
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_list(const std::string& storage_dir, const std::string& pattern_path,
             const std::string& out_path, const std::string& workspace, bool compressed,
             int workers) {
  ddsl::NPStorage storage = ddsl::load_np_storage(storage_dir);
  ddsl::Graph d = storage.reconstruct();
  ddsl::Pattern p = load_pattern(pattern_path);

  if (d.edge_count() == 0) {
    // Nothing can match and no degree distribution exists to plan with.
    if (compressed)
      write_compressed_store(out_path, p.graph().vertex_set(), {p.graph(), {}});
    else
      write_plain_matches(out_path, p, {});
    std::ofstream cj(out_path + ".costs.json");
    if (!cj) throw ddsl::Error("cannot write " + out_path + ".costs.json");
    cj << json{{"matches", 0}, {"stored_units", 0}}.dump(2) << '\n';
    std::cerr << "storage holds no edges, wrote empty store\n";
    return 0;
  }

  auto dist = ddsl::DegreeDistribution::from_graph(d);
  ddsl::PlanResult planned =
      ddsl::plan(p, dist, static_cast<double>(storage.storage_units()));

  ddsl::ExecContext ctx{workers};
  ddsl::Ord closed = ddsl::transitive_closure(p.ord());
  ddsl::EngineResult run =
      ddsl::run_tree(storage, planned.tree, planned.cover, closed, d,
                     /*decompress_final=*/!compressed, ctx, workspace);

  if (compressed)
    write_compressed_store(out_path, planned.cover, run.root);
  else
    write_plain_matches(out_path, p, run.matches);

  json costs;
  costs["cover"] = planned.cover;
  costs["rounds"] = rounds_json(run.rounds);
  costs["total"] = cost_json(run.total);
  costs["closed_form"] = run.closed_form;
  costs["stored_units"] = run.root.units();
  if (!compressed) {
    costs["matches"] = run.matches.size();
    ddsl::CompressionStats stats = ddsl::compression_stats(
        run.root.records, run.root.frag.vertex_count(), run.matches.size());
    costs["plain_units"] = stats.plain_units;
    costs["ratio"] = stats.ratio;
  }
  std::ofstream cj(out_path + ".costs.json");
  if (!cj) throw ddsl::Error("cannot write " + out_path + ".costs.json");
  cj << costs.dump(2) << '\n';

  std::cerr << "listed with cover {";
  bool first = true;
  for (ddsl::VertexId v : planned.cover) {
    if (!first) std::cerr << ' ';
    std::cerr << v;
    first = false;
  }
  std::cerr << "}, " << run.root.records.size() << " records, total cost "
            << run.total.total() << " units\n";
  return 0;
}

int cmd_update(const std::string& storage_dir, const std::string& pattern_path,
               const std::string& matches_path, const std::string& batch_path,
               const std::string& out_path, int workers) {
  ddsl::NPStorage storage = ddsl::load_np_storage(storage_dir);
  ddsl::Graph d = storage.reconstruct();
  ddsl::Pattern p = load_pattern(pattern_path);
  ddsl::UpdateBatch batch = load_batch(batch_path);

  StoreFile sf = read_compressed_store(matches_path);
  if (!sf.cover)
    throw ddsl::Error("match store has no cover header; update needs a compressed store");
  ddsl::Decomposition decomp = ddsl::decompose(p, *sf.cover);

  ddsl::MatchStore old_store;
  old_store.frag = p.graph();
  old_store.records = std::move(sf.records);

  ddsl::ExecContext ctx{workers};
  ddsl::MaintainResult res =
      ddsl::maintain(old_store, storage, d, batch, p, decomp, ctx);

  ddsl::save_np_storage(res.storage, storage_dir);
  write_compressed_store(out_path, *sf.cover, res.store);

  json stats;
  stats["batch"] = {{"additions", batch.additions.size()},
                    {"deletions", batch.deletions.size()}};
  stats["storage_update"] = {{"measured", cost_json(res.np_cost.measured)},
                             {"neighbor_units", res.np_cost.neighbor_units},
                             {"shuffle_bound", res.np_cost.shuffle_bound},
                             {"total_bound", res.np_cost.total_bound}};
  stats["rounds"] = rounds_json(res.rounds);
  stats["total"] = cost_json(res.total);
  json partials = json::array();
  for (const auto& ps : res.patch.partials)
    partials.push_back({{"records", ps.records.size()}, {"units", ps.units()}});
  stats["patch"] = {{"partials", partials},
                    {"merged_records", res.patch.merged.records.size()},
                    {"merged_units", res.patch.merged.units()}};
  stats["store_units"] = res.store.units();
  std::ofstream pj(out_path + ".patch.json");
  if (!pj) throw ddsl::Error("cannot write " + out_path + ".patch.json");
  pj << stats.dump(2) << '\n';

  std::cerr << "applied " << batch.size() << " edits: store now "
            << res.store.records.size() << " records (" << res.store.units()
            << " units)\n";
  return 0;
}

int cmd_verify(const std::string& storage_dir, const std::string& pattern_path,
               const std::string& matches_path) {
  ddsl::NPStorage storage = ddsl::load_np_storage(storage_dir);
  ddsl::Graph d = storage.reconstruct();
  ddsl::Pattern p = load_pattern(pattern_path);

  std::vector<ddsl::Match> claimed;
  if (looks_compressed(matches_path)) {
    StoreFile sf = read_compressed_store(matches_path);
    for (const ddsl::CompressedMatch& cm : sf.records)
      for (ddsl::Match& m : ddsl::decompress(cm, p.graph(), p.ord(), d))
        claimed.push_back(std::move(m));
    std::sort(claimed.begin(), claimed.end());
  } else {
    claimed = read_plain_matches(matches_path, p);
    std::sort(claimed.begin(), claimed.end());
  }

  std::vector<ddsl::Match> expected = ddsl::oracle_list(p, d);

  if (claimed == expected) {
    std::cout << "PASS: " << expected.size() << " matches\n";
    return 0;
  }
  std::cout << "FAIL: file has " << claimed.size() << " matches, reference has "
            << expected.size() << '\n';
  std::size_t i = 0;
  while (i < claimed.size() && i < expected.size() && claimed[i] == expected[i]) ++i;
  if (i < expected.size() &&
      (i >= claimed.size() || !(claimed[i] == expected[i])))
    std::cout << "  first missing or misplaced: " << match_to_string(expected[i]) << '\n';
  if (i < claimed.size())
    std::cout << "  first unexpected: " << match_to_string(claimed[i]) << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributed-style subgraph listing over partitioned storage"};
  app.require_subcommand(1);
  app.fallthrough();  // let --seed / --workers appear after the subcommand too

  std::uint64_t seed = 0;
  int workers = 1;
  app.add_option("--seed", seed, "seed for the hash partitioner")->capture_default_str();
  app.add_option("--workers", workers, "worker threads for listing phases")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  std::string graph_path, pattern_path, storage_dir, out_path, batch_path, matches_path;
  std::string workspace;
  std::uint32_t parts = 1;
  bool hash_partitioner = false;
  double storage_units = 0;
  bool compressed = false;
  bool plain = false;

  CLI::App* build = app.add_subcommand("build", "partition a graph into storage");
  build->add_option("--graph", graph_path, "edge list file")->required();
  build->add_option("--storage", storage_dir, "output storage directory")->required();
  build->add_option("--parts", parts, "number of partitions")
      ->required()
      ->check(CLI::PositiveNumber);
  build->add_flag("--hash-partitioner", hash_partitioner,
                  "hash vertex ids instead of taking them mod the partition count");

  CLI::App* planc = app.add_subcommand("plan", "choose a cover and join tree");
  planc->add_option("--pattern", pattern_path, "pattern file")->required();
  planc->add_option("--graph", graph_path, "edge list file")->required();
  planc->add_option("--storage-units", storage_units,
                    "stored units charged for scanning the partitions");

  CLI::App* est = app.add_subcommand("estimate", "expected match count for a pattern");
  est->add_option("--pattern", pattern_path, "pattern file")->required();
  est->add_option("--graph", graph_path, "edge list file")->required();

  CLI::App* list = app.add_subcommand("list", "list pattern matches from storage");
  list->add_option("--storage", storage_dir, "storage directory")->required();
  list->add_option("--pattern", pattern_path, "pattern file")->required();
  list->add_option("--out", out_path, "output file")->required();
  list->add_option("--workspace", workspace, "directory for per-node stores");
  list->add_flag("--compressed", compressed, "write the compressed store");
  list->add_flag("--plain", plain, "write plain matches (default)");

  CLI::App* upd = app.add_subcommand("update", "apply an edit batch to storage and store");
  upd->add_option("--storage", storage_dir, "storage directory (updated in place)")
      ->required();
  upd->add_option("--pattern", pattern_path, "pattern file")->required();
  upd->add_option("--matches", matches_path, "compressed match store to maintain")
      ->required();
  upd->add_option("--batch", batch_path, "edit batch file")->required();
  upd->add_option("--out", out_path, "output match store")->required();

  CLI::App* ver = app.add_subcommand("verify", "check a match file against a relisting");
  ver->add_option("--storage", storage_dir, "storage directory")->required();
  ver->add_option("--pattern", pattern_path, "pattern file")->required();
  ver->add_option("--matches", matches_path, "match file, plain or compressed")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (build->parsed())
      return cmd_build(graph_path, storage_dir, parts, hash_partitioner, seed);
    if (planc->parsed()) return cmd_plan(pattern_path, graph_path, storage_units);
    if (est->parsed()) return cmd_estimate(pattern_path, graph_path);
    if (list->parsed()) {
      if (compressed && plain)
        throw ddsl::Error("choose one of --compressed or --plain");
      return cmd_list(storage_dir, pattern_path, out_path, workspace, compressed,
                      workers);
    }
    if (upd->parsed())
      return cmd_update(storage_dir, pattern_path, matches_path, batch_path, out_path,
                        workers);
    if (ver->parsed()) return cmd_verify(storage_dir, pattern_path, matches_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
