#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "facetvec/detail/numeric.hpp"
#include "facetvec/rng.hpp"
#include "facetvec/trainer.hpp"

namespace facetvec {

using detail::dot_fd;
using detail::dot_ff;
using detail::log_sigmoid;
using detail::sigmoid;

namespace {

AspectDistribution softmax_of(std::span<const double> input, double input_scale) {
  AspectDistribution d;
  d.input_scale = input_scale;
  d.probs.resize(input.size());
  double m = input[0];
  for (double x : input) m = std::max(m, x);
  double sum = 0.0;
  for (std::size_t s = 0; s < input.size(); ++s) {
    d.probs[s] = std::exp(input[s] - m);
    sum += d.probs[s];
  }
  for (double& p : d.probs) p /= sum;
  return d;
}

}  // namespace

void TrainerConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
  if (dim < 1) fail("dim must be >= 1");
  if (aspects < 1) fail("aspects must be >= 1");
  if (window < 1) fail("window must be >= 1");
  if (!(tau > 0.0) || !std::isfinite(tau)) fail("tau must be positive");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) fail("epsilon must lie in [0, 1]");
  if (!(lambda >= 0.0)) fail("lambda must be >= 0");
  if (!(lr > 0.0)) fail("lr must be positive");
  if (!(lr_floor >= 0.0)) fail("lr_floor must be >= 0");
  if (epochs < 1) fail("epochs must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (walks_per_node < 1) fail("walks_per_node must be >= 1");
  if (walk_length < 2) fail("walk_length must be >= 2");
  if (threads < 1) fail("threads must be >= 1");
  if (deterministic && threads > 1) fail("deterministic mode is single-threaded");
}

std::vector<double> readout(const EmbeddingStore& s, std::span<const NodeId> context,
                            std::uint32_t aspect) {
  if (context.empty()) throw std::invalid_argument("readout: empty context");
  std::vector<double> r(s.dim, 0.0);
  for (NodeId j : context) {
    auto q = s.context_row(aspect, j);
    for (std::uint32_t k = 0; k < s.dim; ++k) r[k] += q[k];
  }
  double inv = 1.0 / static_cast<double>(context.size());
  for (double& x : r) x *= inv;
  return r;
}

std::vector<double> all_readouts(const EmbeddingStore& s, std::span<const NodeId> context) {
  if (context.empty()) throw std::invalid_argument("readout: empty context");
  std::vector<double> r(static_cast<std::size_t>(s.aspects) * s.dim, 0.0);
  for (NodeId j : context) {
    for (std::uint32_t a = 0; a < s.aspects; ++a) {
      auto q = s.context_row(a, j);
      double* dst = r.data() + static_cast<std::size_t>(a) * s.dim;
      for (std::uint32_t k = 0; k < s.dim; ++k) dst[k] += q[k];
    }
  }
  double inv = 1.0 / static_cast<double>(context.size());
  for (double& x : r) x *= inv;
  return r;
}

std::vector<double> aspect_logits(const EmbeddingStore& s, NodeId target,
                                  std::span<const NodeId> context,
                                  const std::vector<double>* cached_readouts) {
  std::vector<double> local;
  const std::vector<double>* r = cached_readouts;
  if (!r) {
    local = all_readouts(s, context);
    r = &local;
  }
  auto tgt = s.target_row(target);
  std::vector<double> scores(s.aspects);
  for (std::uint32_t a = 0; a < s.aspects; ++a)
    scores[a] = dot_fd(tgt, r->data() + static_cast<std::size_t>(a) * s.dim);
  return scores;
}

std::vector<double> draw_gumbel(std::size_t k, Rng& rng) {
  std::vector<double> g(k);
  for (double& x : g) x = rng.next_gumbel();
  return g;
}

AspectDistribution gumbel_softmax(std::span<const double> scores, double tau,
                                  std::span<const double> noise) {
  if (!(tau > 0.0)) throw std::invalid_argument("gumbel_softmax: tau must be positive");
  if (noise.size() != scores.size())
    throw std::invalid_argument("gumbel_softmax: noise/scores size mismatch");
  for (double x : scores)
    if (!std::isfinite(x)) throw std::invalid_argument("gumbel_softmax: non-finite score");

  std::vector<double> input(scores.size());
  for (std::size_t s = 0; s < scores.size(); ++s) input[s] = (scores[s] + noise[s]) / tau;
  AspectDistribution d = softmax_of(input, 1.0 / tau);
  d.logits.assign(scores.begin(), scores.end());
  d.gumbel_noise.assign(noise.begin(), noise.end());
  return d;
}

AspectDistribution plain_softmax(std::span<const double> scores) {
  for (double x : scores)
    if (!std::isfinite(x)) throw std::invalid_argument("softmax: non-finite score");
  AspectDistribution d = softmax_of(scores, 1.0);
  d.logits.assign(scores.begin(), scores.end());
  return d;
}

std::span<double> GradBuffer::row(std::uint32_t matrix, NodeId node) {
  std::uint64_t key = (static_cast<std::uint64_t>(matrix) << 32) | node;
  auto [it, inserted] = slot_.try_emplace(key, static_cast<std::uint32_t>(keys_.size()));
  if (inserted) {
    keys_.push_back(key);
    data_.resize(keys_.size() * static_cast<std::size_t>(dim_), 0.0);
  }
  return {data_.data() + static_cast<std::size_t>(it->second) * dim_, dim_};
}

void GradBuffer::axpy(std::uint32_t matrix, NodeId node, double scale, std::span<const float> v) {
  auto r = row(matrix, node);
  for (std::uint32_t k = 0; k < dim_; ++k) r[k] += scale * static_cast<double>(v[k]);
}

void GradBuffer::axpy(std::uint32_t matrix, NodeId node, double scale, std::span<const double> v) {
  auto r = row(matrix, node);
  for (std::uint32_t k = 0; k < dim_; ++k) r[k] += scale * v[k];
}

void GradBuffer::clear() {
  slot_.clear();
  keys_.clear();
  data_.clear();
}

void GradBuffer::apply(EmbeddingStore& s, double lr) const {
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    std::uint32_t matrix = static_cast<std::uint32_t>(keys_[i] >> 32);
    NodeId node = static_cast<NodeId>(keys_[i] & 0xffffffffULL);
    float* dst = matrix == 0 ? s.target_row(node).data() : s.context_row(matrix - 1, node).data();
    const double* g = data_.data() + i * static_cast<std::size_t>(dim_);
    for (std::uint32_t k = 0; k < dim_; ++k)
      dst[k] = static_cast<float>(static_cast<double>(dst[k]) - lr * g[k]);
  }
}

std::vector<NodeId> GradBuffer::touched_nodes() const {
  std::vector<NodeId> out;
  out.reserve(keys_.size());
  for (std::uint64_t key : keys_) out.push_back(static_cast<NodeId>(key & 0xffffffffULL));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace detail {

double window_loss_general(const EmbeddingStore& s, NodeId target,
                           std::span<const NodeId> context, std::span<const NodeId> selection_ctx,
                           std::span<const NodeId> negatives, std::uint32_t negatives_per_pair,
                           const AspectDistribution& dist, bool hard_forward, GradBuffer* grads,
                           const std::vector<double>* cached_selection_readouts) {
  const std::uint32_t K = s.aspects;
  if (dist.probs.size() != K)
    throw std::invalid_argument("window_loss: distribution has wrong aspect count");
  if (negatives.size() != context.size() * static_cast<std::size_t>(negatives_per_pair))
    throw std::invalid_argument("window_loss: negatives size mismatch");

  // Forward mixture weights; the hard path keeps soft probs for the backward
  // chain (one-hot value, straight-through derivative).
  std::vector<double> hard_w;
  const double* w = dist.probs.data();
  if (hard_forward) {
    hard_w.assign(K, 0.0);
    std::size_t arg = 0;
    for (std::size_t t = 1; t < K; ++t)
      if (dist.probs[t] > dist.probs[arg]) arg = t;
    hard_w[arg] = 1.0;
    w = hard_w.data();
  }

  auto tgt = s.target_row(target);
  std::vector<double> ell(K, 0.0);
  for (std::uint32_t a = 0; a < K; ++a) {
    double es = 0.0;
    for (std::size_t ji = 0; ji < context.size(); ++ji) {
      auto q = s.context_row(a, context[ji]);
      double pos = dot_ff(tgt, q);
      es += log_sigmoid(pos);
      if (grads) {
        double coef = w[a] * sigmoid(-pos);
        grads->axpy(0, target, -coef, q);
        grads->axpy(1 + a, context[ji], -coef, tgt);
      }
      for (std::uint32_t ni = 0; ni < negatives_per_pair; ++ni) {
        NodeId n = negatives[ji * negatives_per_pair + ni];
        auto qn = s.context_row(a, n);
        double neg = dot_ff(tgt, qn);
        es += log_sigmoid(-neg);
        if (grads) {
          double coef = w[a] * sigmoid(neg);
          grads->axpy(0, target, coef, qn);
          grads->axpy(1 + a, n, coef, tgt);
        }
      }
    }
    ell[a] = es;
  }

  double loss = 0.0;
  for (std::uint32_t a = 0; a < K; ++a) loss -= w[a] * ell[a];

  if (grads) {
    // Chain through the mixture weights: scores feed the softmax, scores are
    // dot(target, readout of the selection context). Soft probs drive this
    // term in both modes.
    std::vector<double> local;
    const std::vector<double>* r = cached_selection_readouts;
    if (!r) {
      local = all_readouts(s, selection_ctx);
      r = &local;
    }
    double avg = 0.0;
    for (std::uint32_t a = 0; a < K; ++a) avg += dist.probs[a] * ell[a];
    double inv_c = 1.0 / static_cast<double>(selection_ctx.size());
    for (std::uint32_t a = 0; a < K; ++a) {
      double gscore = dist.probs[a] * (avg - ell[a]) * dist.input_scale;
      grads->axpy(0, target, gscore,
                  std::span<const double>(r->data() + static_cast<std::size_t>(a) * s.dim, s.dim));
      double per_ctx = gscore * inv_c;
      for (NodeId j : selection_ctx) grads->axpy(1 + a, j, per_ctx, tgt);
    }
  }
  return loss;
}

}  // namespace detail

double window_loss(const EmbeddingStore& s, NodeId target, std::span<const NodeId> context,
                   std::span<const NodeId> negatives, std::uint32_t negatives_per_pair,
                   const AspectDistribution& dist, bool hard_forward, GradBuffer* grads,
                   const std::vector<double>* cached_readouts) {
  return detail::window_loss_general(s, target, context, context, negatives, negatives_per_pair,
                                     dist, hard_forward, grads, cached_readouts);
}

double deepwalk_window_loss(const EmbeddingStore& s, NodeId target,
                            std::span<const NodeId> context, std::span<const NodeId> negatives,
                            std::uint32_t negatives_per_pair, GradBuffer* grads) {
  if (negatives.size() != context.size() * static_cast<std::size_t>(negatives_per_pair))
    throw std::invalid_argument("deepwalk_window_loss: negatives size mismatch");
  auto tgt = s.target_row(target);
  double ell = 0.0;
  for (std::size_t ji = 0; ji < context.size(); ++ji) {
    auto q = s.context_row(0, context[ji]);
    double pos = dot_ff(tgt, q);
    ell += log_sigmoid(pos);
    if (grads) {
      double coef = sigmoid(-pos);
      grads->axpy(0, target, -coef, q);
      grads->axpy(1, context[ji], -coef, tgt);
    }
    for (std::uint32_t ni = 0; ni < negatives_per_pair; ++ni) {
      NodeId n = negatives[ji * negatives_per_pair + ni];
      auto qn = s.context_row(0, n);
      double neg = dot_ff(tgt, qn);
      ell += log_sigmoid(-neg);
      if (grads) {
        double coef = sigmoid(neg);
        grads->axpy(0, target, coef, qn);
        grads->axpy(1, n, coef, tgt);
      }
    }
  }
  return -ell;
}

double aspect_similarity(std::span<const float> a, std::span<const float> b,
                         std::size_t* zero_norm_count) {
  double na = dot_ff(a, a);
  double nb = dot_ff(b, b);
  if (na == 0.0 || nb == 0.0) {
    if (zero_norm_count) ++*zero_norm_count;
    return 0.0;
  }
  return dot_ff(a, b) / std::sqrt(na * nb);
}

double regularizer(const EmbeddingStore& s, double epsilon, std::span<const NodeId> node_subset,
                   GradBuffer* grads, std::size_t* zero_norm_count) {
  if (s.aspects < 2) return 0.0;

  std::vector<NodeId> nodes(node_subset.begin(), node_subset.end());
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

  double total = 0.0;
  for (NodeId h : nodes) {
    for (std::uint32_t i = 0; i < s.aspects; ++i) {
      auto qa = s.context_row(i, h);
      double na2 = dot_ff(qa, qa);
      for (std::uint32_t j = i + 1; j < s.aspects; ++j) {
        auto qb = s.context_row(j, h);
        double nb2 = dot_ff(qb, qb);
        if (na2 == 0.0 || nb2 == 0.0) {
          if (zero_norm_count) ++*zero_norm_count;
          continue;
        }
        double denom = std::sqrt(na2 * nb2);
        double f = dot_ff(qa, qb) / denom;
        double af = std::fabs(f);
        if (af < epsilon) continue;  // mask is a frozen gate; boundary included
        total += af;
        if (grads && f != 0.0) {
          double sign = f > 0.0 ? 1.0 : -1.0;
          grads->axpy(1 + i, h, sign / denom, qb);
          grads->axpy(1 + i, h, -sign * f / na2, qa);
          grads->axpy(1 + j, h, sign / denom, qa);
          grads->axpy(1 + j, h, -sign * f / nb2, qb);
        }
      }
    }
  }
  return total;
}

std::vector<NodeAspectStats> aspect_distribution_stats(const EmbeddingStore& s,
                                                       const WalkCorpus& corpus,
                                                       const TrainerConfig& cfg) {
  std::vector<double> prob_sum(static_cast<std::size_t>(s.nodes) * s.aspects, 0.0);
  std::vector<std::uint64_t> count(s.nodes, 0);

  for_each_window(corpus, cfg.window,
                  [&](std::size_t, std::size_t, NodeId target, std::span<const NodeId> ctx) {
                    auto scores = aspect_logits(s, target, ctx);
                    auto dist = plain_softmax(scores);
                    double* sums = prob_sum.data() + static_cast<std::size_t>(target) * s.aspects;
                    for (std::uint32_t a = 0; a < s.aspects; ++a) sums[a] += dist.probs[a];
                    ++count[target];
                  });

  std::vector<NodeAspectStats> out(s.nodes);
  for (NodeId v = 0; v < s.nodes; ++v) {
    out[v].frequency = count[v];
    if (count[v] == 0) continue;
    const double* sums = prob_sum.data() + static_cast<std::size_t>(v) * s.aspects;
    double mean = 0.0;
    for (std::uint32_t a = 0; a < s.aspects; ++a) mean += sums[a] / count[v];
    mean /= s.aspects;
    double var = 0.0;
    for (std::uint32_t a = 0; a < s.aspects; ++a) {
      double d = sums[a] / count[v] - mean;
      var += d * d;
    }
    out[v].variance = var / s.aspects;
  }
  return out;
}

std::vector<double> aspect_heatmap(const EmbeddingStore& s, std::size_t* zero_norm_count) {
  if (s.aspects < 2) throw std::invalid_argument("aspect_heatmap: needs at least 2 aspects");
  const std::uint32_t K = s.aspects;
  std::vector<double> m(static_cast<std::size_t>(K) * K, 1.0);
  for (std::uint32_t i = 0; i < K; ++i) {
    for (std::uint32_t j = i + 1; j < K; ++j) {
      double acc = 0.0;
      for (NodeId h = 0; h < s.nodes; ++h)
        acc += aspect_similarity(s.context_row(i, h), s.context_row(j, h), zero_norm_count);
      acc /= static_cast<double>(s.nodes);
      m[static_cast<std::size_t>(i) * K + j] = acc;
      m[static_cast<std::size_t>(j) * K + i] = acc;
    }
  }
  return m;
}

double heatmap_off_diagonal_mean(std::span<const double> heatmap, std::uint32_t aspects) {
  if (aspects < 2) return 0.0;
  double acc = 0.0;
  for (std::uint32_t i = 0; i < aspects; ++i)
    for (std::uint32_t j = 0; j < aspects; ++j)
      if (i != j) acc += std::fabs(heatmap[static_cast<std::size_t>(i) * aspects + j]);
  return acc / (static_cast<double>(aspects) * (aspects - 1));
}

}  // namespace facetvec
