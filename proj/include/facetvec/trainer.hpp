#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "facetvec/graph.hpp"
#include "facetvec/store.hpp"
#include "facetvec/walks.hpp"

namespace facetvec {

// How the per-window mixture over aspects is formed. `softmax` is the
// noise-free ablation; `gumbel` perturbs scores with Gumbel noise and a
// temperature before normalizing.
enum class AspectSelection { gumbel, softmax };

struct TrainerConfig {
  std::uint32_t dim = 20;        // d, per-aspect embedding width
  std::uint32_t aspects = 5;     // K
  std::uint32_t window = 3;
  std::uint32_t negatives = 2;   // per (target, context-node) pair
  double tau = 0.5;
  double lambda = 0.01;
  double epsilon = 0.9;          // similarity mask threshold, in [0,1]
  double lr = 0.025;
  double lr_floor = 1e-4;
  std::uint32_t epochs = 5;
  std::uint32_t batch_size = 128;
  std::uint64_t seed = 1;
  bool warmup = true;
  bool reg_enabled = true;
  bool hard_sample = false;      // one-hot forward, soft backward
  AspectSelection selection = AspectSelection::gumbel;

  std::uint32_t walks_per_node = 10;
  std::uint32_t walk_length = 80;

  std::uint32_t threads = 1;
  bool deterministic = true;     // forbids threads > 1
  bool full_reg_scope = false;   // regularize all nodes each batch (tiny graphs)
  double init_scale = -1.0;      // < 0 selects 0.5 / dim

  void validate() const;         // throws std::invalid_argument
};

// Per-window aspect mixture. probs is a pure function of
// (logits, gumbel_noise, tau); input_scale records d(softmax input)/d(logit)
// so gradients can be chained without re-deriving which path produced it.
struct AspectDistribution {
  std::vector<double> logits;        // raw similarity scores, one per aspect
  std::vector<double> probs;         // mixture weights, sum to 1
  std::vector<double> gumbel_noise;  // empty for the noise-free path
  double input_scale = 1.0;          // 1/tau for the tempered path, else 1
};

// Mean of the aspect-s context rows over a nonempty context.
std::vector<double> readout(const EmbeddingStore& s, std::span<const NodeId> context,
                            std::uint32_t aspect);

// All K readouts, row-major K x dim.
std::vector<double> all_readouts(const EmbeddingStore& s, std::span<const NodeId> context);

// Score of each aspect: dot(target row, readout of that aspect).
// cached_readouts, when given, must be all_readouts(s, context).
std::vector<double> aspect_logits(const EmbeddingStore& s, NodeId target,
                                  std::span<const NodeId> context,
                                  const std::vector<double>* cached_readouts = nullptr);

// K independent standard Gumbel draws.
std::vector<double> draw_gumbel(std::size_t k, struct Rng& rng);

// probs = softmax((scores + noise) / tau). Throws on non-finite scores,
// tau <= 0, or a noise/scores length mismatch.
AspectDistribution gumbel_softmax(std::span<const double> scores, double tau,
                                  std::span<const double> noise);

// probs = softmax(scores), no temperature, no noise.
AspectDistribution plain_softmax(std::span<const double> scores);

// Sparse gradient accumulator: one double-precision row per touched
// (matrix, node). Matrix 0 is the target matrix; matrix 1+s is aspect s.
// apply() performs row -= lr * grad on the store, one write per row, so a
// batch's gradients are all taken at the pre-step parameter values.
class GradBuffer {
 public:
  GradBuffer(std::uint32_t dim, std::uint32_t aspects) : dim_(dim), aspects_(aspects) {}

  std::span<double> row(std::uint32_t matrix, NodeId node);
  void axpy(std::uint32_t matrix, NodeId node, double scale, std::span<const float> v);
  void axpy(std::uint32_t matrix, NodeId node, double scale, std::span<const double> v);

  void clear();
  bool empty() const { return keys_.size() == 0; }
  void apply(EmbeddingStore& s, double lr) const;

  // Distinct node ids touched by any row, ascending.
  std::vector<NodeId> touched_nodes() const;

  std::uint32_t dim() const { return dim_; }

 private:
  std::uint32_t dim_;
  std::uint32_t aspects_;
  std::unordered_map<std::uint64_t, std::uint32_t> slot_;
  std::vector<std::uint64_t> keys_;  // insertion order
  std::vector<double> data_;
};

// Skip-gram loss of one window under the aspect mixture:
//   loss = -sum_j sum_s w_s [log sig(<P_i,Q_j^s>) + sum_n log sig(-<P_i,Q_n^s>)]
// with w = dist.probs (or its one-hot argmax when hard_forward, gradients
// still flowing through the soft probs). negatives holds
// context.size() * negatives_per_pair ids, grouped by context position; one
// negative group is shared across aspects. Gradients (when grads != null)
// cover the target row, every touched context/negative row, and the chain
// through the mixture weights and readouts.
double window_loss(const EmbeddingStore& s, NodeId target, std::span<const NodeId> context,
                   std::span<const NodeId> negatives, std::uint32_t negatives_per_pair,
                   const AspectDistribution& dist, bool hard_forward = false,
                   GradBuffer* grads = nullptr,
                   const std::vector<double>* cached_readouts = nullptr);

// Plain single-matrix skip-gram loss of one window (the K-free baseline
// trainer's inner step). Uses aspect matrix 0 as the context matrix.
double deepwalk_window_loss(const EmbeddingStore& s, NodeId target,
                            std::span<const NodeId> context, std::span<const NodeId> negatives,
                            std::uint32_t negatives_per_pair, GradBuffer* grads = nullptr);

// Cosine similarity; a zero-norm operand yields 0 and bumps *zero_norm_count.
double aspect_similarity(std::span<const float> a, std::span<const float> b,
                         std::size_t* zero_norm_count = nullptr);

// Masked aspect-overlap penalty over the given nodes:
//   sum_h sum_{i<j} [|cos(Q_h^i, Q_h^j)| >= epsilon] * |cos(Q_h^i, Q_h^j)|.
// The mask is a constant gate in the gradients; |f| contributes
// sign(f) * dcos, with subgradient 0 at f == 0. Duplicate ids in node_subset
// are collapsed. Returns 0 when there is a single aspect.
double regularizer(const EmbeddingStore& s, double epsilon, std::span<const NodeId> node_subset,
                   GradBuffer* grads = nullptr, std::size_t* zero_norm_count = nullptr);

struct TrainLogRecord {
  std::uint32_t epoch = 0;
  std::uint64_t step = 0;       // windows processed so far
  double mean_loss = 0.0;       // mean window loss within the epoch
  double mean_reg = 0.0;        // mean unscaled penalty per batch within the epoch
};

struct TrainLog {
  std::vector<TrainLogRecord> records;
  std::size_t zero_norm_cosines = 0;
  std::size_t context_filter_fallbacks = 0;  // heterogeneous runs only
  void write_csv(std::ostream& out) const;
};

// Full training run: corpus generation (unless one is supplied), optional
// warm-up, epoch loop of shuffled walks in minibatches with the masked
// penalty applied per batch, divergence detection, and final fusion. The
// returned store has finite parameters and a populated fused matrix.
EmbeddingStore train(const Graph& g, const TrainerConfig& cfg, const WalkCorpus* corpus = nullptr,
                     TrainLog* log = nullptr);

// Single-aspect skip-gram baseline over the same engine loop (same shuffle,
// batching, schedule, and draw streams). With aspects == 1 and the penalty
// off, train() reproduces this run bit for bit.
EmbeddingStore train_deepwalk(const Graph& g, const TrainerConfig& cfg,
                              const WalkCorpus* corpus = nullptr, TrainLog* log = nullptr);

// Baseline-initialized parameters: runs the single-aspect trainer on the
// corpus, copies its target matrix, and seeds every aspect context matrix
// with the baseline context matrix plus N(0, 0.01) per entry to break
// aspect symmetry. With cfg.warmup false, falls through to init_random.
EmbeddingStore warmup_init(const Graph& g, const TrainerConfig& cfg, const WalkCorpus& corpus);

struct NodeAspectStats {
  std::uint64_t frequency = 0;  // windows with this node as target
  double variance = 0.0;        // spread of its mean aspect-probability vector
};

// Noise-free per-node aspect usage: for each node, the mean over its windows
// of softmax(aspect scores), reduced to the population variance of that
// K-vector's components. Nodes that never appear as a target get (0, 0).
std::vector<NodeAspectStats> aspect_distribution_stats(const EmbeddingStore& s,
                                                       const WalkCorpus& corpus,
                                                       const TrainerConfig& cfg);

// K x K row-major matrix: entry (i, j) is the mean over nodes of
// cos(Q_h^i, Q_h^j); the diagonal is exactly 1.
std::vector<double> aspect_heatmap(const EmbeddingStore& s,
                                   std::size_t* zero_norm_count = nullptr);

// Mean absolute off-diagonal entry of aspect_heatmap output.
double heatmap_off_diagonal_mean(std::span<const double> heatmap, std::uint32_t aspects);

}  // namespace facetvec
