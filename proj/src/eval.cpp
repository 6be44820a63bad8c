#include "facetvec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "facetvec/rng.hpp"

namespace facetvec {

namespace {

std::uint64_t pair_key(NodeId u, NodeId v, bool directed) {
  if (!directed && u > v) std::swap(u, v);
  return (static_cast<std::uint64_t>(u) << 32) | v;
}

// Reachability of `to` from `from` in the undirected projection of adj.
bool reaches(const std::vector<std::vector<NodeId>>& undirected, NodeId from, NodeId to,
             std::vector<NodeId>& queue, std::vector<std::uint32_t>& visited,
             std::uint32_t stamp) {
  if (from == to) return true;
  queue.clear();
  queue.push_back(from);
  visited[from] = stamp;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    for (NodeId nxt : undirected[queue[head]]) {
      if (visited[nxt] == stamp) continue;
      if (nxt == to) return true;
      visited[nxt] = stamp;
      queue.push_back(nxt);
    }
  }
  return false;
}

void erase_one(std::vector<NodeId>& v, NodeId x) {
  auto it = std::find(v.begin(), v.end(), x);
  if (it != v.end()) v.erase(it);
}

}  // namespace

EdgeSplit split_edges(const Graph& g, std::uint64_t seed) {
  EdgeSplit split;
  split.seed = seed;

  auto edges = edge_list(g);
  split.requested_test_edges = edges.size() / 2;

  // Undirected projection used for all connectivity checks.
  std::vector<std::vector<NodeId>> undirected(g.node_count());
  for (auto [u, v] : edges) {
    undirected[u].push_back(v);
    undirected[v].push_back(u);
  }

  std::vector<std::size_t> order(edges.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_stream(seed, kStreamSplit, 0));
  rng.shuffle(order);

  std::vector<char> removed(edges.size(), 0);
  std::vector<NodeId> queue;
  std::vector<std::uint32_t> visited(g.node_count(), 0);
  std::uint32_t stamp = 0;
  std::size_t taken = 0;

  for (std::size_t oi = 0; oi < order.size() && taken < split.requested_test_edges; ++oi) {
    auto [u, v] = edges[order[oi]];
    erase_one(undirected[u], v);
    erase_one(undirected[v], u);
    if (reaches(undirected, u, v, queue, visited, ++stamp)) {
      removed[order[oi]] = 1;
      ++taken;
    } else {
      undirected[u].push_back(v);
      undirected[v].push_back(u);
    }
  }

  if (taken < split.requested_test_edges)
    split.warning = "only " + std::to_string(taken) + " of " +
                    std::to_string(split.requested_test_edges) +
                    " requested test edges were removable without disconnecting the graph";

  for (std::size_t i = 0; i < edges.size(); ++i)
    (removed[i] ? split.test_pos : split.train_pos).push_back(edges[i]);

  // Residual graph: same nodes, names, and types; train_pos adjacency only.
  split.residual.directed = g.directed;
  split.residual.node_names = g.node_names;
  split.residual.name_to_id = g.name_to_id;
  split.residual.type_of = g.type_of;
  split.residual.type_names = g.type_names;
  split.residual.adjacency.assign(g.node_count(), {});
  for (auto [u, v] : split.train_pos) {
    split.residual.adjacency[u].push_back(v);
    if (!g.directed) split.residual.adjacency[v].push_back(u);
  }

  // Negative pairs: uniform, absent from the full edge set, distinct.
  std::unordered_set<std::uint64_t> present;
  for (auto [u, v] : edges) present.insert(pair_key(u, v, g.directed));

  const std::size_t want = 2 * split.test_pos.size();
  const std::uint64_t n = g.node_count();
  const std::uint64_t total_pairs = g.directed ? n * (n - 1) : n * (n - 1) / 2;
  const std::uint64_t available = total_pairs - present.size();

  std::vector<Edge> negatives;
  negatives.reserve(want);
  Rng neg_rng(derive_stream(seed, kStreamSplit, 1));
  if (available < 4 * static_cast<std::uint64_t>(want)) {
    // Dense graph: rejection sampling would stall, so enumerate the non-edges
    // outright. Only near-complete graphs land here, where the enumeration is
    // no larger than the edge set itself.
    std::vector<Edge> candidates;
    for (NodeId u = 0; u < n; ++u)
      for (NodeId v = g.directed ? 0 : u + 1; v < n; ++v)
        if (u != v && !present.count(pair_key(u, v, g.directed))) candidates.emplace_back(u, v);
    neg_rng.shuffle(candidates);
    if (candidates.size() > want) candidates.resize(want);
    if (candidates.size() < want) {
      if (!split.warning.empty()) split.warning += "; ";
      split.warning += "only " + std::to_string(candidates.size()) + " of " +
                       std::to_string(want) + " requested negative pairs exist";
    }
    negatives = std::move(candidates);
  } else {
    std::unordered_set<std::uint64_t> chosen;
    while (negatives.size() < want) {
      NodeId u = static_cast<NodeId>(neg_rng.next_below(n));
      NodeId v = static_cast<NodeId>(neg_rng.next_below(n));
      if (u == v) continue;
      std::uint64_t key = pair_key(u, v, g.directed);
      if (present.count(key) || !chosen.insert(key).second) continue;
      negatives.emplace_back(u, v);
    }
  }
  split.train_neg.assign(negatives.begin(), negatives.begin() + negatives.size() / 2);
  split.test_neg.assign(negatives.begin() + negatives.size() / 2, negatives.end());
  return split;
}

void write_split_files(const EdgeSplit& split, const Graph& g, const std::string& prefix,
                       std::span<const std::string> extra_meta) {
  auto dump = [&](const std::vector<Edge>& edges, const std::string& name) {
    std::ofstream out(prefix + name + ".edges");
    if (!out) throw std::runtime_error("cannot write split file: " + prefix + name + ".edges");
    out << "# split seed=" << split.seed << " part=" << name << " edges=" << edges.size() << '\n';
    if (!split.warning.empty()) out << "# warning: " << split.warning << '\n';
    for (const auto& line : extra_meta) out << "# " << line << '\n';
    for (auto [u, v] : edges) out << g.node_names[u] << ' ' << g.node_names[v] << '\n';
  };
  dump(split.train_pos, "train_pos");
  dump(split.test_pos, "test_pos");
  dump(split.train_neg, "train_neg");
  dump(split.test_neg, "test_neg");
}

EdgeOp parse_edge_op(const std::string& name) {
  if (name == "hadamard") return EdgeOp::hadamard;
  if (name == "average") return EdgeOp::average;
  if (name == "l1") return EdgeOp::l1;
  if (name == "l2") return EdgeOp::l2;
  throw std::invalid_argument("unknown edge feature operator: " + name);
}

std::string edge_op_name(EdgeOp op) {
  switch (op) {
    case EdgeOp::hadamard: return "hadamard";
    case EdgeOp::average: return "average";
    case EdgeOp::l1: return "l1";
    case EdgeOp::l2: return "l2";
  }
  return "?";
}

std::vector<double> edge_features(const float* embeddings, std::uint32_t dim, NodeId u, NodeId v,
                                  EdgeOp op) {
  const float* a = embeddings + static_cast<std::size_t>(u) * dim;
  const float* b = embeddings + static_cast<std::size_t>(v) * dim;
  std::vector<double> f(dim);
  switch (op) {
    case EdgeOp::hadamard:
      for (std::uint32_t k = 0; k < dim; ++k) f[k] = static_cast<double>(a[k]) * b[k];
      break;
    case EdgeOp::average:
      for (std::uint32_t k = 0; k < dim; ++k) f[k] = (static_cast<double>(a[k]) + b[k]) / 2.0;
      break;
    case EdgeOp::l1:
      for (std::uint32_t k = 0; k < dim; ++k) f[k] = std::fabs(static_cast<double>(a[k]) - b[k]);
      break;
    case EdgeOp::l2:
      for (std::uint32_t k = 0; k < dim; ++k) {
        double d = static_cast<double>(a[k]) - b[k];
        f[k] = d * d;
      }
      break;
  }
  return f;
}

double LogRegModel::score(std::span<const double> x) const {
  double z = bias;
  for (std::size_t k = 0; k < weights.size(); ++k) z += weights[k] * x[k];
  return z;
}

namespace {

// Mean logistic loss + ridge term and its gradient at (w, b).
double loss_and_grad(std::span<const double> X, std::span<const int> y, std::size_t dim,
                     double l2, const std::vector<double>& w, double b,
                     std::vector<double>& gw, double& gb) {
  std::size_t n = y.size();
  gw.assign(dim, 0.0);
  gb = 0.0;
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = X.data() + i * dim;
    double z = b;
    for (std::size_t k = 0; k < dim; ++k) z += w[k] * x[k];
    // log(1 + exp(-s*z)) with s = +-1, stable form
    double s = y[i] ? 1.0 : -1.0;
    double m = -s * z;
    loss += m > 0.0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
    double p = m > 0.0 ? 1.0 / (1.0 + std::exp(-m)) : std::exp(m) / (1.0 + std::exp(m));
    double coef = -s * p;  // d loss_i / d z
    for (std::size_t k = 0; k < dim; ++k) gw[k] += coef * x[k];
    gb += coef;
  }
  double inv_n = 1.0 / static_cast<double>(n);
  loss *= inv_n;
  gb *= inv_n;
  double ridge = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    gw[k] = gw[k] * inv_n + l2 * w[k];
    ridge += w[k] * w[k];
  }
  return loss + 0.5 * l2 * ridge;
}

}  // namespace

double logreg_loss(const LogRegModel& m, std::span<const double> X, std::span<const int> labels,
                   std::size_t dim, double l2) {
  std::vector<double> gw;
  double gb;
  return loss_and_grad(X, labels, dim, l2, m.weights, m.bias, gw, gb);
}

LogRegModel fit_logreg(std::span<const double> X, std::span<const int> labels, std::size_t dim,
                       double l2, std::uint32_t max_iter, double tol) {
  std::size_t n = labels.size();
  if (n == 0 || X.size() != n * dim) throw std::invalid_argument("fit_logreg: shape mismatch");
  bool has_pos = false, has_neg = false;
  for (int y : labels) (y ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg)
    throw std::invalid_argument("fit_logreg: both classes must be present");

  LogRegModel m;
  m.weights.assign(dim, 0.0);
  std::vector<double> gw, trial_gw, trial_w(dim);
  double gb = 0.0, trial_gb = 0.0;
  double loss = loss_and_grad(X, labels, dim, l2, m.weights, m.bias, gw, gb);

  double step = 1.0;
  for (m.iterations = 0; m.iterations < max_iter; ++m.iterations) {
    double gnorm2 = gb * gb;
    for (double gk : gw) gnorm2 += gk * gk;
    if (std::sqrt(gnorm2) < tol) {
      m.converged = true;
      break;
    }
    // Armijo backtracking on the full objective. A trial is accepted only on
    // finite, sufficient decrease; if no such step exists the current point
    // is kept and the search stops.
    double trial_b;
    double new_loss;
    bool stalled = false;
    step *= 2.0;  // allow recovery after conservative steps
    while (true) {
      for (std::size_t k = 0; k < dim; ++k) trial_w[k] = m.weights[k] - step * gw[k];
      trial_b = m.bias - step * gb;
      new_loss = loss_and_grad(X, labels, dim, l2, trial_w, trial_b, trial_gw, trial_gb);
      if (std::isfinite(new_loss) && new_loss <= loss - 1e-4 * step * gnorm2) break;
      step *= 0.5;
      if (step < 1e-18) {
        stalled = true;
        break;
      }
    }
    if (stalled) break;
    m.weights.swap(trial_w);
    m.bias = trial_b;
    gw.swap(trial_gw);
    gb = trial_gb;
    loss = new_loss;
  }
  m.final_loss = loss;
  return m;
}

double auc_roc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw std::invalid_argument("auc_roc: shape mismatch");
  std::size_t pos = 0;
  for (int y : labels) pos += y ? 1 : 0;
  std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw std::invalid_argument("auc_roc: both classes must be present");

  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midranks over ties, then the Mann-Whitney statistic.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t)
      if (labels[idx[t]]) rank_sum_pos += midrank;
    i = j;
  }
  double u_stat = rank_sum_pos - static_cast<double>(pos) * (pos + 1) / 2.0;
  return u_stat / (static_cast<double>(pos) * static_cast<double>(neg));
}

EvalReport evaluate(const float* embeddings, std::uint32_t dim, const EdgeSplit& split, EdgeOp op,
                    double l2) {
  if (split.test_pos.empty() || split.test_neg.empty())
    throw std::runtime_error("evaluate: empty test split");

  auto build = [&](std::span<const Edge> edges, std::vector<double>& X, std::vector<int>& y,
                   int label) {
    for (auto [u, v] : edges) {
      auto f = edge_features(embeddings, dim, u, v, op);
      X.insert(X.end(), f.begin(), f.end());
      y.push_back(label);
    }
  };

  std::vector<double> Xtr, Xte;
  std::vector<int> ytr, yte;
  build(split.train_pos, Xtr, ytr, 1);
  build(split.train_neg, Xtr, ytr, 0);
  build(split.test_pos, Xte, yte, 1);
  build(split.test_neg, Xte, yte, 0);

  // Standardize features on the training statistics. Plain gradient descent
  // is badly conditioned when feature scales differ from the bias column;
  // the affine map leaves the optimum's decisions (and hence AUC) unchanged.
  std::vector<double> mean(dim, 0.0), scale(dim, 0.0);
  std::size_t ntr = ytr.size();
  for (std::size_t i = 0; i < ntr; ++i)
    for (std::uint32_t k = 0; k < dim; ++k) mean[k] += Xtr[i * dim + k];
  for (std::uint32_t k = 0; k < dim; ++k) mean[k] /= static_cast<double>(ntr);
  for (std::size_t i = 0; i < ntr; ++i)
    for (std::uint32_t k = 0; k < dim; ++k) {
      double d = Xtr[i * dim + k] - mean[k];
      scale[k] += d * d;
    }
  for (std::uint32_t k = 0; k < dim; ++k) {
    scale[k] = std::sqrt(scale[k] / static_cast<double>(ntr));
    if (scale[k] <= 0.0) scale[k] = 1.0;  // constant feature: leave centered
  }
  auto standardize = [&](std::vector<double>& X) {
    for (std::size_t i = 0; i < X.size() / dim; ++i)
      for (std::uint32_t k = 0; k < dim; ++k)
        X[i * dim + k] = (X[i * dim + k] - mean[k]) / scale[k];
  };
  standardize(Xtr);
  standardize(Xte);

  LogRegModel model = fit_logreg(Xtr, ytr, dim, l2, 2000, 1e-7);

  std::vector<double> scores(yte.size());
  for (std::size_t i = 0; i < yte.size(); ++i)
    scores[i] = model.score(std::span<const double>(Xte.data() + i * dim, dim));

  EvalReport rep;
  rep.auc = auc_roc(scores, yte);
  rep.train_pos = split.train_pos.size();
  rep.train_neg = split.train_neg.size();
  rep.test_pos = split.test_pos.size();
  rep.test_neg = split.test_neg.size();
  rep.split_seed = split.seed;
  rep.feature_op = edge_op_name(op);
  rep.feature_dim = dim;
  rep.classifier_bias = model.bias;
  double wn = 0.0;
  for (double w : model.weights) wn += w * w;
  rep.classifier_weight_norm = std::sqrt(wn);
  rep.classifier_converged = model.converged;
  rep.classifier_iterations = model.iterations;
  rep.train_loss = model.final_loss;
  rep.warning = split.warning;
  return rep;
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["auc"] = auc;
  j["counts"] = {{"train_pos", train_pos},
                 {"train_neg", train_neg},
                 {"test_pos", test_pos},
                 {"test_neg", test_neg}};
  j["split_seed"] = split_seed;
  j["feature_op"] = feature_op;
  j["feature_dim"] = feature_dim;
  j["classifier"] = {{"bias", classifier_bias},
                     {"weight_norm", classifier_weight_norm},
                     {"converged", classifier_converged},
                     {"iterations", classifier_iterations},
                     {"train_loss", train_loss}};
  if (!warning.empty()) j["warning"] = warning;
  return j.dump(2);
}

}  // namespace facetvec
