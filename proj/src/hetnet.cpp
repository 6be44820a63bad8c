#include "facetvec/hetnet.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "facetvec/detail/engine.hpp"
#include "facetvec/detail/numeric.hpp"
#include "facetvec/eval.hpp"
#include "facetvec/rng.hpp"

namespace facetvec {

using detail::dot_fd;
using detail::log_sigmoid;
using detail::sigmoid;

Metapath Metapath::parse(const std::string& csv, const Graph& g) {
  if (!g.typed()) throw std::invalid_argument("metapath: graph has no node types");
  Metapath m;
  std::istringstream ss(csv);
  std::string tag;
  while (std::getline(ss, tag, ',')) {
    // trim surrounding blanks
    std::size_t b = tag.find_first_not_of(" \t");
    std::size_t e = tag.find_last_not_of(" \t");
    if (b == std::string::npos) throw std::invalid_argument("metapath: empty type tag in " + csv);
    m.scheme.push_back(g.type_id(tag.substr(b, e - b + 1)));
  }
  if (m.scheme.size() < 2) throw std::invalid_argument("metapath must list at least 2 types");
  if (m.scheme.front() != m.scheme.back())
    throw std::invalid_argument("metapath must start and end with the same type: " + csv);

  // Every consecutive type pair needs at least one edge in the schema.
  for (std::size_t i = 0; i + 1 < m.scheme.size(); ++i) {
    bool found = false;
    for (NodeId u = 0; u < g.node_count() && !found; ++u) {
      if (g.type_of[u] != m.scheme[i]) continue;
      for (NodeId v : g.adjacency[u]) {
        if (g.type_of[v] == m.scheme[i + 1]) {
          found = true;
          break;
        }
      }
    }
    if (!found)
      throw std::invalid_argument("metapath step " + g.type_names[m.scheme[i]] + " -> " +
                                  g.type_names[m.scheme[i + 1]] +
                                  " has no supporting edge in the graph");
  }
  return m;
}

WalkCorpus metapath_walks(const Graph& g, std::span<const Metapath> schemes,
                          std::uint32_t walks_per_node, std::uint32_t walk_length,
                          std::uint64_t seed) {
  if (!g.typed()) throw std::invalid_argument("metapath_walks: graph has no node types");
  if (schemes.empty()) throw std::invalid_argument("metapath_walks: no schemes");
  if (walks_per_node == 0 || walk_length < 2)
    throw std::invalid_argument("metapath_walks: walks_per_node >= 1 and walk_length >= 2");

  WalkCorpus c;
  c.walks_per_node = walks_per_node;
  c.walk_length = walk_length;
  c.seed = seed;
  c.graph_hash = g.structure_hash();

  std::vector<NodeId> matching;
  for (std::size_t si = 0; si < schemes.size(); ++si) {
    const auto& scheme = schemes[si].scheme;
    const std::size_t period = scheme.size() - 1;  // last type repeats the first
    for (NodeId start = 0; start < g.node_count(); ++start) {
      if (g.type_of[start] != scheme.front()) continue;
      for (std::uint32_t rep = 0; rep < walks_per_node; ++rep) {
        Rng rng(derive_stream(seed, kStreamWalk, si, start, rep));
        std::vector<NodeId> walk;
        walk.reserve(walk_length);
        walk.push_back(start);
        NodeId cur = start;
        while (walk.size() < walk_length) {
          TypeId want = scheme[walk.size() % period];
          matching.clear();
          for (NodeId nxt : g.adjacency[cur])
            if (g.type_of[nxt] == want) matching.push_back(nxt);
          if (matching.empty()) break;
          cur = matching[rng.next_below(matching.size())];
          walk.push_back(cur);
        }
        c.walks.push_back(std::move(walk));
      }
    }
  }
  if (c.walks.empty())
    throw std::runtime_error("metapath_walks: no walks (no node matches any scheme's start type)");
  return c;
}

namespace detail {

double single_aspect_window_loss(const EmbeddingStore& s, NodeId target,
                                 std::span<const NodeId> context,
                                 std::span<const NodeId> negatives,
                                 std::uint32_t negatives_per_pair, GradBuffer* grads) {
  auto tgt = s.target_row(target);
  const std::uint32_t K = s.aspects;
  const double inv_k = 1.0 / K;
  std::vector<double> mean(s.dim);

  auto mean_context = [&](NodeId j) {
    for (std::uint32_t k = 0; k < s.dim; ++k) {
      double acc = 0.0;
      for (std::uint32_t a = 0; a < K; ++a) acc += s.context_row(a, j)[k];
      mean[k] = acc * inv_k;
    }
  };

  double ell = 0.0;
  for (std::size_t ji = 0; ji < context.size(); ++ji) {
    NodeId j = context[ji];
    mean_context(j);
    double pos = dot_fd(tgt, mean.data());
    ell += log_sigmoid(pos);
    if (grads) {
      double coef = sigmoid(-pos);
      grads->axpy(0, target, -coef, std::span<const double>(mean.data(), s.dim));
      for (std::uint32_t a = 0; a < K; ++a) grads->axpy(1 + a, j, -coef * inv_k, tgt);
    }
    for (std::uint32_t ni = 0; ni < negatives_per_pair; ++ni) {
      NodeId n = negatives[ji * negatives_per_pair + ni];
      mean_context(n);
      double neg = dot_fd(tgt, mean.data());
      ell += log_sigmoid(-neg);
      if (grads) {
        double coef = sigmoid(neg);
        grads->axpy(0, target, coef, std::span<const double>(mean.data(), s.dim));
        for (std::uint32_t a = 0; a < K; ++a) grads->axpy(1 + a, n, coef * inv_k, tgt);
      }
    }
  }
  return -ell;
}

}  // namespace detail

namespace {

struct HetProcessor {
  const TrainerConfig* cfg;
  const std::vector<detail::AliasTable>* tables;  // one per type id
  const Graph* graph;
  std::vector<char> aspect_context_type;  // indexed by type id
  std::vector<char> single_aspect_type;
  std::atomic<std::size_t>* fallbacks;

  std::vector<NodeId> negbuf;
  std::vector<NodeId> selbuf;

  void draw_typed_negatives(std::uint32_t epoch, std::size_t walk_idx, std::size_t pos,
                            std::span<const NodeId> ctx) {
    negbuf.resize(ctx.size() * cfg->negatives);
    if (negbuf.empty()) return;
    Rng rng(derive_stream(cfg->seed, kStreamNegative, epoch, walk_idx, pos));
    std::size_t out = 0;
    for (NodeId j : ctx) {
      const auto& table = (*tables)[graph->type_of[j]];
      for (std::uint32_t ni = 0; ni < cfg->negatives; ++ni) negbuf[out++] = table.sample(rng);
    }
  }

  double process(EmbeddingStore& store, std::uint32_t epoch, std::size_t walk_idx,
                 std::size_t pos, NodeId target, std::span<const NodeId> ctx, GradBuffer& grads) {
    draw_typed_negatives(epoch, walk_idx, pos, ctx);

    if (single_aspect_type[graph->type_of[target]])
      return detail::single_aspect_window_loss(store, target, ctx, negbuf, cfg->negatives, &grads);

    // Multi-aspect target: selection context is the type-filtered window.
    selbuf.clear();
    for (NodeId j : ctx)
      if (aspect_context_type[graph->type_of[j]]) selbuf.push_back(j);
    std::span<const NodeId> sel(selbuf.data(), selbuf.size());
    if (sel.empty()) {
      fallbacks->fetch_add(1, std::memory_order_relaxed);
      sel = ctx;
    }

    auto readouts = all_readouts(store, sel);
    auto scores = aspect_logits(store, target, sel, &readouts);

    AspectDistribution dist;
    if (cfg->selection == AspectSelection::softmax) {
      dist = plain_softmax(scores);
    } else if (store.aspects == 1) {
      static const std::vector<double> no_noise{0.0};
      dist = gumbel_softmax(scores, cfg->tau, no_noise);
    } else {
      Rng rng(derive_stream(cfg->seed, kStreamAspectNoise, epoch, walk_idx, pos));
      auto gn = draw_gumbel(store.aspects, rng);
      for (double& x : gn) x *= cfg->tau;
      dist = gumbel_softmax(scores, cfg->tau, gn);
    }
    return detail::window_loss_general(store, target, ctx, sel, negbuf, cfg->negatives, dist,
                                       cfg->hard_sample, &grads, &readouts);
  }
};

}  // namespace

EmbeddingStore train_het(const Graph& g, const TrainerConfig& cfg,
                         std::span<const TypeId> aspect_context_types,
                         std::span<const TypeId> single_aspect_types, const WalkCorpus* corpus,
                         TrainLog* log, std::span<const Metapath> schemes) {
  cfg.validate();
  if (!g.typed()) throw std::invalid_argument("train_het: graph has no node types");
  if (aspect_context_types.empty())
    throw std::invalid_argument("train_het: aspect_context_types must be nonempty");

  std::size_t n_types = g.type_names.size();
  std::vector<char> act(n_types, 0), sat(n_types, 0);
  for (TypeId t : aspect_context_types) {
    if (t >= n_types) throw std::invalid_argument("train_het: unknown aspect context type id");
    act[t] = 1;
  }
  for (TypeId t : single_aspect_types) {
    if (t >= n_types) throw std::invalid_argument("train_het: unknown single-aspect type id");
    sat[t] = 1;
  }

  WalkCorpus local;
  if (!corpus) {
    if (schemes.empty())
      throw std::invalid_argument("train_het: need a walk corpus or metapath schemes");
    local = metapath_walks(g, schemes, cfg.walks_per_node, cfg.walk_length, cfg.seed);
    corpus = &local;
  } else if (corpus->graph_hash != g.structure_hash()) {
    throw std::runtime_error("walk corpus does not match this graph (hash mismatch)");
  }

  EmbeddingStore store =
      cfg.warmup ? warmup_init(g, cfg, *corpus)
                 : init_random(g.node_count(), cfg.dim, cfg.aspects, cfg.seed, cfg.init_scale);

  // One noise table per node type, over that type's corpus-frequent nodes.
  auto freq = detail::corpus_frequencies(*corpus, g.node_count());
  std::vector<detail::AliasTable> tables(n_types);
  for (std::size_t t = 0; t < n_types; ++t) {
    std::vector<NodeId> ids;
    for (NodeId v = 0; v < g.node_count(); ++v)
      if (g.type_of[v] == t) ids.push_back(v);
    if (!ids.empty()) {
      bool any = false;
      for (NodeId v : ids) any = any || freq[v] > 0.0;
      if (any) tables[t] = detail::noise_table(freq, ids);
    }
  }
  // A context node's type always has a table (the node itself has corpus
  // frequency > 0), so missing tables are only hit by a caller bug.

  std::atomic<std::size_t> fallbacks{0};
  HetProcessor proc{&cfg, &tables, &g, std::move(act), std::move(sat), &fallbacks, {}, {}};
  detail::run_epochs(store, *corpus, cfg, proc, log);
  if (log) log->context_filter_fallbacks += fallbacks.load();

  finalize(store);
  return store;
}

RankingReport ranking_metrics(std::span<const RankingQuery> queries,
                              std::span<const std::uint32_t> n_list) {
  RankingReport rep;
  rep.n_list.assign(n_list.begin(), n_list.end());
  rep.recall.assign(n_list.size(), 0.0);
  rep.precision.assign(n_list.size(), 0.0);
  rep.f1.assign(n_list.size(), 0.0);

  std::vector<std::size_t> order;
  std::vector<double> scores;
  std::vector<int> labels;

  for (const auto& q : queries) {
    std::size_t pos = 0;
    for (const auto& c : q.candidates) pos += c.positive ? 1 : 0;
    std::size_t neg = q.candidates.size() - pos;
    if (pos == 0 || neg == 0) {
      ++rep.queries_skipped;
      continue;
    }
    ++rep.queries_used;

    order.resize(q.candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return q.candidates[a].score > q.candidates[b].score;
    });

    for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
      std::size_t n = n_list[ni];
      std::size_t top = std::min<std::size_t>(n, order.size());
      std::size_t hits = 0;
      for (std::size_t i = 0; i < top; ++i) hits += q.candidates[order[i]].positive ? 1 : 0;
      double recall = static_cast<double>(hits) / static_cast<double>(pos);
      double precision = n ? static_cast<double>(hits) / static_cast<double>(n) : 0.0;
      rep.recall[ni] += recall;
      rep.precision[ni] += precision;
      rep.f1[ni] += (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall)
                                               : 0.0;
    }

    scores.clear();
    labels.clear();
    for (const auto& c : q.candidates) {
      scores.push_back(c.score);
      labels.push_back(c.positive ? 1 : 0);
    }
    rep.auc += auc_roc(scores, labels);
  }

  if (rep.queries_used) {
    double inv = 1.0 / static_cast<double>(rep.queries_used);
    for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
      rep.recall[ni] *= inv;
      rep.precision[ni] *= inv;
      rep.f1[ni] *= inv;
    }
    rep.auc *= inv;
  }
  return rep;
}

}  // namespace facetvec
