#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace facetvec {

using NodeId = std::uint32_t;
using TypeId = std::uint16_t;

inline constexpr TypeId kUntyped = 0xffff;

// In-memory graph. Nodes are dense indices in first-appearance order of the
// source edge list; adjacency preserves insertion order. Undirected graphs
// store each edge in both endpoint lists.
struct Graph {
  bool directed = false;
  std::vector<std::vector<NodeId>> adjacency;
  std::vector<std::string> node_names;
  std::unordered_map<std::string, NodeId> name_to_id;

  // Node types are optional; empty type_of means the graph is untyped.
  std::vector<TypeId> type_of;
  std::vector<std::string> type_names;

  std::size_t self_loops_dropped = 0;
  std::size_t duplicates_dropped = 0;

  NodeId node_count() const { return static_cast<NodeId>(adjacency.size()); }
  bool typed() const { return !type_of.empty(); }

  // Out-neighbors in insertion order. Out-of-range id is a caller bug worth
  // failing loudly on.
  std::span<const NodeId> neighbors(NodeId v) const;

  // Directed: number of stored arcs. Undirected: number of edges (counting
  // multiplicity if the graph was loaded without dedupe).
  std::size_t edge_count() const;

  TypeId type_id(const std::string& tag) const;

  // Stable fingerprint of node names, direction, and adjacency; used to
  // validate cached artifacts against the graph they were produced from.
  std::uint64_t structure_hash() const;
};

// Parses "u v" pairs, one per line. '#'/'%' lines and blank lines are
// skipped. Ids are arbitrary strings. Self-loops are dropped (counted);
// duplicate edges are dropped (counted) when dedupe is set. Throws
// std::runtime_error naming the 1-based line for malformed input, or if the
// stream yields no edges.
Graph load_edge_list(std::istream& in, bool directed, bool dedupe = true);
Graph load_edge_list_file(const std::string& path, bool directed, bool dedupe = true);

// Reads "node_id type_tag" lines ('#'/'%' comments allowed). Every line must
// name a node present in the graph; after loading, every node must have a
// type. Type ids are dense in first-appearance order.
void load_node_types(Graph& g, std::istream& in);
void load_node_types_file(Graph& g, const std::string& path);

// Canonical edge enumeration: directed arcs as stored; undirected edges once
// each, smaller endpoint first by node id order.
std::vector<std::pair<NodeId, NodeId>> edge_list(const Graph& g);

// Writes edges as "name_u name_v" lines, one per edge (undirected edges once).
void export_edge_list(const Graph& g, std::ostream& out);

}  // namespace facetvec
