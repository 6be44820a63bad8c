#include "facetvec/graph.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "facetvec/rng.hpp"

namespace facetvec {

namespace {

bool is_comment_or_blank(const std::string& line) {
  for (char c : line) {
    if (c == ' ' || c == '\t' || c == '\r') continue;
    return c == '#' || c == '%';
  }
  return true;
}

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(std::move(tok));
  return out;
}

}  // namespace

std::span<const NodeId> Graph::neighbors(NodeId v) const {
  if (v >= adjacency.size())
    throw std::out_of_range("neighbors: node id " + std::to_string(v) + " out of range (" +
                            std::to_string(adjacency.size()) + " nodes)");
  return {adjacency[v].data(), adjacency[v].size()};
}

std::size_t Graph::edge_count() const {
  std::size_t total = 0;
  for (const auto& a : adjacency) total += a.size();
  return directed ? total : total / 2;
}

TypeId Graph::type_id(const std::string& tag) const {
  for (std::size_t i = 0; i < type_names.size(); ++i)
    if (type_names[i] == tag) return static_cast<TypeId>(i);
  throw std::runtime_error("unknown node type tag: " + tag);
}

std::uint64_t Graph::structure_hash() const {
  std::uint64_t h = derive_stream(adjacency.size(), directed ? 1 : 0);
  for (NodeId v = 0; v < node_count(); ++v) {
    for (char c : node_names[v]) h = mix64(h, static_cast<unsigned char>(c));
    h = mix64(h, adjacency[v].size());
    for (NodeId u : adjacency[v]) h = mix64(h, u);
  }
  return h;
}

Graph load_edge_list(std::istream& in, bool directed, bool dedupe) {
  Graph g;
  g.directed = directed;

  auto intern = [&g](const std::string& name) -> NodeId {
    auto it = g.name_to_id.find(name);
    if (it != g.name_to_id.end()) return it->second;
    NodeId id = static_cast<NodeId>(g.adjacency.size());
    g.name_to_id.emplace(name, id);
    g.node_names.push_back(name);
    g.adjacency.emplace_back();
    return id;
  };

  // Edge identity for dedupe: undirected edges are canonicalized.
  std::unordered_set<std::uint64_t> seen;
  auto edge_key = [directed](NodeId u, NodeId v) {
    if (!directed && u > v) std::swap(u, v);
    return (static_cast<std::uint64_t>(u) << 32) | v;
  };

  std::string line;
  std::size_t line_no = 0;
  std::size_t edges_kept = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_comment_or_blank(line)) continue;
    auto toks = tokenize(line);
    if (toks.size() != 2)
      throw std::runtime_error("edge list line " + std::to_string(line_no) + ": expected 2 tokens, got " +
                               std::to_string(toks.size()));
    NodeId u = intern(toks[0]);
    NodeId v = intern(toks[1]);
    if (u == v) {
      ++g.self_loops_dropped;
      continue;
    }
    if (dedupe && !seen.insert(edge_key(u, v)).second) {
      ++g.duplicates_dropped;
      continue;
    }
    g.adjacency[u].push_back(v);
    if (!directed) g.adjacency[v].push_back(u);
    ++edges_kept;
  }
  if (edges_kept == 0) throw std::runtime_error("edge list contains no usable edges");
  return g;
}

Graph load_edge_list_file(const std::string& path, bool directed, bool dedupe) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open edge list: " + path);
  try {
    return load_edge_list(in, directed, dedupe);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void load_node_types(Graph& g, std::istream& in) {
  g.type_of.assign(g.node_count(), kUntyped);
  g.type_names.clear();

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_comment_or_blank(line)) continue;
    auto toks = tokenize(line);
    if (toks.size() != 2)
      throw std::runtime_error("node type line " + std::to_string(line_no) + ": expected 2 tokens, got " +
                               std::to_string(toks.size()));
    auto it = g.name_to_id.find(toks[0]);
    if (it == g.name_to_id.end())
      throw std::runtime_error("node type line " + std::to_string(line_no) + ": unknown node '" + toks[0] +
                               "'");
    TypeId t = kUntyped;
    for (std::size_t i = 0; i < g.type_names.size(); ++i)
      if (g.type_names[i] == toks[1]) t = static_cast<TypeId>(i);
    if (t == kUntyped) {
      t = static_cast<TypeId>(g.type_names.size());
      g.type_names.push_back(toks[1]);
    }
    g.type_of[it->second] = t;
  }
  for (NodeId v = 0; v < g.node_count(); ++v)
    if (g.type_of[v] == kUntyped)
      throw std::runtime_error("node '" + g.node_names[v] + "' has no type assignment");
}

void load_node_types_file(Graph& g, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open node type file: " + path);
  try {
    load_node_types(g, in);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

std::vector<std::pair<NodeId, NodeId>> edge_list(const Graph& g) {
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(g.edge_count());
  for (NodeId u = 0; u < g.node_count(); ++u)
    for (NodeId v : g.adjacency[u])
      if (g.directed || u < v) out.emplace_back(u, v);
  return out;
}

void export_edge_list(const Graph& g, std::ostream& out) {
  for (auto [u, v] : edge_list(g)) out << g.node_names[u] << ' ' << g.node_names[v] << '\n';
}

}  // namespace facetvec
