#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "facetvec/graph.hpp"

namespace facetvec {

using Edge = std::pair<NodeId, NodeId>;

// Connectivity-preserving link-prediction split. residual holds exactly the
// train_pos edges over the original node set; negatives are uniform non-edges
// (checked against the full original edge set), deduplicated, self-pair free.
struct EdgeSplit {
  std::vector<Edge> train_pos;
  std::vector<Edge> test_pos;
  std::vector<Edge> train_neg;
  std::vector<Edge> test_neg;
  Graph residual;
  std::uint64_t seed = 0;
  std::size_t requested_test_edges = 0;  // floor(|E| / 2)
  std::string warning;                   // nonempty when fewer were removable
};

// Removes randomly chosen edges one at a time, keeping an edge out only if
// the residual stays connected (undirected sense) over the nodes that were
// connected originally, until floor(|E|/2) are removed or no removable edge
// remains (then warns and reports the actual count). Draws 2*|test_pos|
// distinct negative pairs uniformly and splits them evenly. Deterministic
// under seed.
EdgeSplit split_edges(const Graph& g, std::uint64_t seed);

// Writes test_pos/train_pos/train_neg/test_neg as edge-list files under
// prefix ("<prefix>train_pos.edges", ...), each with a '#' metadata header
// (extra_meta lines are embedded verbatim after a leading "# ").
void write_split_files(const EdgeSplit& split, const Graph& g, const std::string& prefix,
                       std::span<const std::string> extra_meta = {});

enum class EdgeOp { hadamard, average, l1, l2 };

// Throws on anything other than "hadamard", "average", "l1", "l2".
EdgeOp parse_edge_op(const std::string& name);
std::string edge_op_name(EdgeOp op);

// Per-edge feature vector from node embeddings (row-major, `dim` wide):
// hadamard u.*v, average (u+v)/2, l1 |u-v|, l2 (u-v).^2.
std::vector<double> edge_features(const float* embeddings, std::uint32_t dim, NodeId u, NodeId v,
                                  EdgeOp op);

struct LogRegModel {
  std::vector<double> weights;
  double bias = 0.0;
  std::uint32_t iterations = 0;
  bool converged = false;
  double final_loss = 0.0;

  double score(std::span<const double> x) const;  // linear score w.x + b
};

// Minimizes mean logistic loss + l2/2 * |w|^2 (bias unpenalized) by gradient
// descent with Armijo backtracking. Converged when the gradient norm drops
// below tol. X is row-major n x d. Throws if labels are single-class.
LogRegModel fit_logreg(std::span<const double> X, std::span<const int> labels, std::size_t dim,
                       double l2 = 1e-4, std::uint32_t max_iter = 1000, double tol = 1e-6);

// Mean logistic loss + l2/2*|w|^2 of a model on a dataset; the quantity
// fit_logreg minimizes.
double logreg_loss(const LogRegModel& m, std::span<const double> X, std::span<const int> labels,
                   std::size_t dim, double l2);

// Rank-based (Mann-Whitney) AUC with ties counted 1/2. Throws unless both
// classes are present.
double auc_roc(std::span<const double> scores, std::span<const int> labels);

struct EvalReport {
  double auc = 0.0;
  std::size_t train_pos = 0, train_neg = 0, test_pos = 0, test_neg = 0;
  std::uint64_t split_seed = 0;
  std::string feature_op;
  std::size_t feature_dim = 0;
  double classifier_bias = 0.0;
  double classifier_weight_norm = 0.0;
  bool classifier_converged = false;
  std::uint32_t classifier_iterations = 0;
  double train_loss = 0.0;
  std::string warning;

  std::string to_json() const;
};

// Link-prediction protocol: fit on train_pos (label 1) and train_neg
// (label 0), report AUC over test_pos and test_neg. `embeddings` must come
// from a model trained on split.residual only.
EvalReport evaluate(const float* embeddings, std::uint32_t dim, const EdgeSplit& split, EdgeOp op,
                    double l2 = 1e-4);

}  // namespace facetvec
