#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "facetvec/graph.hpp"

namespace facetvec {

// A bag of truncated random walks plus the parameters that produced it.
// graph_hash binds a cached corpus to the exact graph it was generated from.
struct WalkCorpus {
  std::vector<std::vector<NodeId>> walks;
  std::uint32_t walks_per_node = 0;
  std::uint32_t walk_length = 0;
  std::uint64_t seed = 0;
  std::uint64_t graph_hash = 0;

  std::size_t total_positions() const {
    std::size_t n = 0;
    for (const auto& w : walks) n += w.size();
    return n;
  }

  // Positions that emit a nonempty context for any window >= 1: every
  // position of every walk of length >= 2.
  std::size_t window_positions() const {
    std::size_t n = 0;
    for (const auto& w : walks) n += w.size() >= 2 ? w.size() : 0;
    return n;
  }
};

// walks_per_node uniform random walks from every node, each truncated at
// walk_length nodes, next hop uniform over out-neighbors. A walk reaching a
// node with no out-neighbors ends early; a start node with no out-neighbors
// still yields the single-node walk. Each (start, repeat) pair has its own
// random stream, so the corpus does not depend on generation order.
WalkCorpus generate_walks(const Graph& g, std::uint32_t walks_per_node, std::uint32_t walk_length,
                          std::uint64_t seed);

// Visits every (target, context) pair of the walks in [first_walk, last_walk).
// The context is the up-to-`window` positions on each side of the target,
// truncated at the walk ends, in walk order. Positions with an empty context
// (single-node walks) are skipped. fn(walk_index, position, target, context).
template <typename Fn>
void for_each_window_in(const WalkCorpus& c, std::size_t first_walk, std::size_t last_walk,
                        std::uint32_t window, Fn&& fn) {
  std::vector<NodeId> ctx;
  ctx.reserve(2 * static_cast<std::size_t>(window));
  for (std::size_t wi = first_walk; wi < last_walk; ++wi) {
    const auto& walk = c.walks[wi];
    for (std::size_t pos = 0; pos < walk.size(); ++pos) {
      std::size_t lo = pos >= window ? pos - window : 0;
      std::size_t hi = pos + window + 1 < walk.size() ? pos + window + 1 : walk.size();
      ctx.clear();
      for (std::size_t t = lo; t < hi; ++t)
        if (t != pos) ctx.push_back(walk[t]);
      if (ctx.empty()) continue;
      fn(wi, pos, walk[pos], std::span<const NodeId>(ctx.data(), ctx.size()));
    }
  }
}

template <typename Fn>
void for_each_window(const WalkCorpus& c, std::uint32_t window, Fn&& fn) {
  for_each_window_in(c, 0, c.walks.size(), window, static_cast<Fn&&>(fn));
}

// Text cache: a commented header carrying the generation parameters and the
// graph hash, then one walk of node ids per line. Loading verifies the hash
// against the graph the caller intends to train on.
void save_corpus(const WalkCorpus& c, std::ostream& out);
void save_corpus_file(const WalkCorpus& c, const std::string& path);
WalkCorpus load_corpus(std::istream& in, std::uint64_t expected_graph_hash);
WalkCorpus load_corpus_file(const std::string& path, std::uint64_t expected_graph_hash);

}  // namespace facetvec
