#pragma once

#include <cmath>
#include <span>

#include "facetvec/trainer.hpp"

namespace facetvec::detail {

inline double dot_ff(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    acc += static_cast<double>(a[k]) * static_cast<double>(b[k]);
  return acc;
}

inline double dot_fd(std::span<const float> a, const double* b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += static_cast<double>(a[k]) * b[k];
  return acc;
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

// log(sigmoid(x)), stable on both tails.
inline double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

// window_loss with the mixture chain driven by a context subset that may
// differ from the predicted context (the heterogeneous trainer restricts
// aspect selection to certain node types). selection_ctx must be the context
// the readouts/logits were computed from; with selection_ctx == context this
// is exactly the public window_loss.
double window_loss_general(const EmbeddingStore& s, NodeId target,
                           std::span<const NodeId> context, std::span<const NodeId> selection_ctx,
                           std::span<const NodeId> negatives, std::uint32_t negatives_per_pair,
                           const AspectDistribution& dist, bool hard_forward, GradBuffer* grads,
                           const std::vector<double>* cached_selection_readouts);

// Plain skip-gram terms of one window against mean-aspect context vectors;
// the single-aspect-target case of heterogeneous training. Gradients push
// 1/K of each context-vector update into every aspect matrix.
double single_aspect_window_loss(const EmbeddingStore& s, NodeId target,
                                 std::span<const NodeId> context, std::span<const NodeId> negatives,
                                 std::uint32_t negatives_per_pair, GradBuffer* grads = nullptr);

}  // namespace facetvec::detail
