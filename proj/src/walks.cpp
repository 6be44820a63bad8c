#include "facetvec/walks.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "facetvec/rng.hpp"

namespace facetvec {

WalkCorpus generate_walks(const Graph& g, std::uint32_t walks_per_node, std::uint32_t walk_length,
                          std::uint64_t seed) {
  if (walks_per_node == 0 || walk_length == 0)
    throw std::invalid_argument("generate_walks: walks_per_node and walk_length must be positive");

  WalkCorpus c;
  c.walks_per_node = walks_per_node;
  c.walk_length = walk_length;
  c.seed = seed;
  c.graph_hash = g.structure_hash();
  c.walks.resize(static_cast<std::size_t>(walks_per_node) * g.node_count());

  // Corpus order: grouped by start node, then repeat index.
  for (NodeId start = 0; start < g.node_count(); ++start) {
    for (std::uint32_t rep = 0; rep < walks_per_node; ++rep) {
      Rng rng(derive_stream(seed, kStreamWalk, start, rep));
      auto& walk = c.walks[static_cast<std::size_t>(start) * walks_per_node + rep];
      walk.reserve(walk_length);
      NodeId cur = start;
      walk.push_back(cur);
      while (walk.size() < walk_length) {
        auto nbrs = g.neighbors(cur);
        if (nbrs.empty()) break;
        cur = nbrs[rng.next_below(nbrs.size())];
        walk.push_back(cur);
      }
    }
  }
  return c;
}

void save_corpus(const WalkCorpus& c, std::ostream& out) {
  out << "# facetvec-walks v1\n";
  out << "# walks_per_node=" << c.walks_per_node << " walk_length=" << c.walk_length
      << " seed=" << c.seed << " graph_hash=" << std::hex << c.graph_hash << std::dec << '\n';
  for (const auto& walk : c.walks) {
    for (std::size_t i = 0; i < walk.size(); ++i) {
      if (i) out << ' ';
      out << walk[i];
    }
    out << '\n';
  }
}

void save_corpus_file(const WalkCorpus& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write walk corpus: " + path);
  save_corpus(c, out);
}

WalkCorpus load_corpus(std::istream& in, std::uint64_t expected_graph_hash) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# facetvec-walks", 0) != 0)
    throw std::runtime_error("walk corpus: missing format header");
  if (!std::getline(in, line))
    throw std::runtime_error("walk corpus: missing parameter header");

  WalkCorpus c;
  {
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) {
      auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      std::string key = tok.substr(0, eq);
      std::string val = tok.substr(eq + 1);
      if (key == "walks_per_node") c.walks_per_node = static_cast<std::uint32_t>(std::stoul(val));
      else if (key == "walk_length") c.walk_length = static_cast<std::uint32_t>(std::stoul(val));
      else if (key == "seed") c.seed = std::stoull(val);
      else if (key == "graph_hash") c.graph_hash = std::stoull(val, nullptr, 16);
    }
  }
  if (c.walks_per_node == 0 || c.walk_length == 0)
    throw std::runtime_error("walk corpus: incomplete parameter header");
  if (c.graph_hash != expected_graph_hash)
    throw std::runtime_error("walk corpus was generated from a different graph (hash mismatch)");

  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::vector<NodeId> walk;
    std::uint64_t id;
    while (ss >> id) walk.push_back(static_cast<NodeId>(id));
    if (walk.empty()) continue;
    if (walk.size() > c.walk_length)
      throw std::runtime_error("walk corpus: walk longer than declared walk_length");
    c.walks.push_back(std::move(walk));
  }
  if (c.walks.empty()) throw std::runtime_error("walk corpus: no walks");
  return c;
}

WalkCorpus load_corpus_file(const std::string& path, std::uint64_t expected_graph_hash) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open walk corpus: " + path);
  try {
    return load_corpus(in, expected_graph_hash);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace facetvec
