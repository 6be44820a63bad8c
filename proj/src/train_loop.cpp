#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "facetvec/detail/engine.hpp"
#include "facetvec/rng.hpp"
#include "facetvec/trainer.hpp"

namespace facetvec {

namespace {

// Draws the window's negatives into buf: negatives_per_pair per context node,
// grouped by context position, from the window's own stream.
void draw_negatives(std::vector<NodeId>& buf, const detail::AliasTable& noise,
                    const TrainerConfig& cfg, std::uint32_t epoch, std::size_t walk_idx,
                    std::size_t pos, std::size_t context_size) {
  buf.resize(context_size * cfg.negatives);
  if (buf.empty()) return;
  Rng rng(derive_stream(cfg.seed, kStreamNegative, epoch, walk_idx, pos));
  for (NodeId& n : buf) n = noise.sample(rng);
}

struct AspectProcessor {
  const TrainerConfig* cfg;
  const detail::AliasTable* noise;
  std::vector<NodeId> negbuf;

  double process(EmbeddingStore& store, std::uint32_t epoch, std::size_t walk_idx,
                 std::size_t pos, NodeId target, std::span<const NodeId> ctx, GradBuffer& grads) {
    draw_negatives(negbuf, *noise, *cfg, epoch, walk_idx, pos, ctx.size());
    auto readouts = all_readouts(store, ctx);
    auto scores = aspect_logits(store, target, ctx, &readouts);

    AspectDistribution dist;
    if (cfg->selection == AspectSelection::softmax) {
      dist = plain_softmax(scores);
    } else if (store.aspects == 1) {
      static const std::vector<double> no_noise{0.0};
      dist = gumbel_softmax(scores, cfg->tau, no_noise);
    } else {
      // Raw similarity scores are not log-probabilities, so the noise is
      // pre-scaled by tau: softmax((score + tau*g)/tau) stays well-defined
      // for scores of any sign and keeps the one-hot limit as tau -> 0.
      Rng rng(derive_stream(cfg->seed, kStreamAspectNoise, epoch, walk_idx, pos));
      auto g = draw_gumbel(store.aspects, rng);
      for (double& x : g) x *= cfg->tau;
      dist = gumbel_softmax(scores, cfg->tau, g);
    }
    return window_loss(store, target, ctx, negbuf, cfg->negatives, dist, cfg->hard_sample, &grads,
                       &readouts);
  }
};

struct DeepwalkProcessor {
  const TrainerConfig* cfg;
  const detail::AliasTable* noise;
  std::vector<NodeId> negbuf;

  double process(EmbeddingStore& store, std::uint32_t epoch, std::size_t walk_idx,
                 std::size_t pos, NodeId target, std::span<const NodeId> ctx, GradBuffer& grads) {
    draw_negatives(negbuf, *noise, *cfg, epoch, walk_idx, pos, ctx.size());
    return deepwalk_window_loss(store, target, ctx, negbuf, cfg->negatives, &grads);
  }
};

const WalkCorpus* ensure_corpus(const Graph& g, const TrainerConfig& cfg,
                                const WalkCorpus* corpus, WalkCorpus& local) {
  if (corpus) {
    if (corpus->graph_hash != g.structure_hash())
      throw std::runtime_error("walk corpus does not match this graph (hash mismatch)");
    return corpus;
  }
  local = generate_walks(g, cfg.walks_per_node, cfg.walk_length, cfg.seed);
  return &local;
}

detail::AliasTable global_noise_table(const Graph& g, const WalkCorpus& corpus) {
  auto freq = detail::corpus_frequencies(corpus, g.node_count());
  std::vector<NodeId> ids(g.node_count());
  std::iota(ids.begin(), ids.end(), 0);
  return detail::noise_table(freq, ids);
}

}  // namespace

void TrainLog::write_csv(std::ostream& out) const {
  out << "epoch,step,mean_loss,mean_reg\n";
  for (const auto& r : records)
    out << r.epoch << ',' << r.step << ',' << r.mean_loss << ',' << r.mean_reg << '\n';
}

EmbeddingStore train(const Graph& g, const TrainerConfig& cfg, const WalkCorpus* corpus,
                     TrainLog* log) {
  cfg.validate();
  if (g.node_count() == 0) throw std::invalid_argument("train: empty graph");

  WalkCorpus local;
  corpus = ensure_corpus(g, cfg, corpus, local);

  EmbeddingStore store =
      cfg.warmup ? warmup_init(g, cfg, *corpus)
                 : init_random(g.node_count(), cfg.dim, cfg.aspects, cfg.seed, cfg.init_scale);

  auto noise = global_noise_table(g, *corpus);
  AspectProcessor proc{&cfg, &noise, {}};
  detail::run_epochs(store, *corpus, cfg, proc, log);
  finalize(store);
  return store;
}

EmbeddingStore train_deepwalk(const Graph& g, const TrainerConfig& cfg, const WalkCorpus* corpus,
                              TrainLog* log) {
  cfg.validate();
  if (g.node_count() == 0) throw std::invalid_argument("train: empty graph");

  WalkCorpus local;
  corpus = ensure_corpus(g, cfg, corpus, local);

  EmbeddingStore store = init_random(g.node_count(), cfg.dim, 1, cfg.seed, cfg.init_scale);
  auto noise = global_noise_table(g, *corpus);
  DeepwalkProcessor proc{&cfg, &noise, {}};
  detail::run_epochs(store, *corpus, cfg, proc, log);
  finalize(store);
  return store;
}

EmbeddingStore warmup_init(const Graph& g, const TrainerConfig& cfg, const WalkCorpus& corpus) {
  if (!cfg.warmup)
    return init_random(g.node_count(), cfg.dim, cfg.aspects, cfg.seed, cfg.init_scale);

  TrainerConfig base = cfg;
  base.warmup = false;
  base.reg_enabled = false;
  EmbeddingStore dw = train_deepwalk(g, base, &corpus);

  EmbeddingStore out;
  out.nodes = g.node_count();
  out.dim = cfg.dim;
  out.aspects = cfg.aspects;
  out.target = dw.target;
  out.aspect_context.resize(static_cast<std::size_t>(cfg.aspects) * out.nodes * out.dim);

  // One baseline context matrix seeds all aspect matrices; small independent
  // noise breaks the symmetry between them.
  const double sigma = 0.01;
  for (std::uint32_t a = 0; a < cfg.aspects; ++a) {
    Rng rng(derive_stream(cfg.seed, kStreamWarmup, a));
    const float* src = dw.aspect_context.data();
    float* dst = out.aspect_context.data() + static_cast<std::size_t>(a) * out.nodes * out.dim;
    for (std::size_t i = 0; i < static_cast<std::size_t>(out.nodes) * out.dim; ++i)
      dst[i] = static_cast<float>(static_cast<double>(src[i]) + sigma * rng.next_gaussian());
  }
  return out;
}

}  // namespace facetvec
