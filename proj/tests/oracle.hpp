#pragma once

// Independent reference implementations used to cross-check the library.
// Everything here is written from the definitions, deliberately avoiding the
// library's own code paths: brute-force pair counting for AUC, a Newton
// solver for the ridge logistic objective, chi-square machinery for sampler
// checks, and a generic central-finite-difference probe over store entries.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "facetvec/store.hpp"

namespace oracle {

// ---- statistics -----------------------------------------------------------

// AUC as the literal pair-counting probability: P(score_pos > score_neg),
// ties counted one half. O(pos * neg).
inline double pairwise_auc(std::span<const double> scores, std::span<const int> labels) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      ++pairs;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  if (pairs == 0) throw std::invalid_argument("pairwise_auc: need both classes");
  return wins / static_cast<double>(pairs);
}

// Chi-square goodness-of-fit statistic against given expected counts.
inline double chi_square(std::span<const std::uint64_t> observed,
                         std::span<const double> expected) {
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    double d = static_cast<double>(observed[i]) - expected[i];
    stat += d * d / expected[i];
  }
  return stat;
}

// Upper 1% critical value of the chi-square distribution via the
// Wilson-Hilferty cube approximation (z_{0.99} = 2.3263478740408408).
inline double chi2_critical_99(double df) {
  const double z = 2.3263478740408408;
  double t = 1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df));
  return df * t * t * t;
}

// ---- logistic regression (Newton) ----------------------------------------

struct NewtonResult {
  std::vector<double> weights;
  double bias = 0.0;
  double loss = 0.0;
};

// Full Newton iteration on mean logistic loss + l2/2 * |w|^2 (bias free),
// solving the (d+1)x(d+1) system by Gaussian elimination with partial
// pivoting. Converges quadratically on these strictly convex problems.
inline NewtonResult newton_logreg(std::span<const double> X, std::span<const int> y,
                                  std::size_t dim, double l2, int iters = 60) {
  std::size_t n = y.size();
  std::size_t m = dim + 1;  // weights then bias
  std::vector<double> w(m, 0.0);

  auto objective = [&](const std::vector<double>& wb) {
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double z = wb[dim];
      for (std::size_t k = 0; k < dim; ++k) z += wb[k] * X[i * dim + k];
      double s = y[i] ? 1.0 : -1.0;
      double t = -s * z;
      loss += t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
    }
    loss /= static_cast<double>(n);
    for (std::size_t k = 0; k < dim; ++k) loss += 0.5 * l2 * wb[k] * wb[k];
    return loss;
  };

  std::vector<double> grad(m), H(m * m), rhs(m);
  for (int it = 0; it < iters; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    std::fill(H.begin(), H.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double z = w[dim];
      for (std::size_t k = 0; k < dim; ++k) z += w[k] * X[i * dim + k];
      double p = 1.0 / (1.0 + std::exp(-z));  // P(y=1)
      double r = p - (y[i] ? 1.0 : 0.0);
      double s = p * (1.0 - p);
      for (std::size_t a = 0; a < m; ++a) {
        double xa = a < dim ? X[i * dim + a] : 1.0;
        grad[a] += r * xa;
        for (std::size_t b = 0; b < m; ++b) {
          double xb = b < dim ? X[i * dim + b] : 1.0;
          H[a * m + b] += s * xa * xb;
        }
      }
    }
    double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t a = 0; a < m; ++a) {
      grad[a] *= inv_n;
      for (std::size_t b = 0; b < m; ++b) H[a * m + b] *= inv_n;
    }
    for (std::size_t k = 0; k < dim; ++k) {
      grad[k] += l2 * w[k];
      H[k * m + k] += l2;
    }
    H[dim * m + dim] += 1e-12;  // bias row safeguard for separable inputs

    // Solve H * step = grad.
    rhs = grad;
    std::vector<double> A = H;
    std::vector<std::size_t> perm(m);
    for (std::size_t k = 0; k < m; ++k) perm[k] = k;
    for (std::size_t col = 0; col < m; ++col) {
      std::size_t piv = col;
      for (std::size_t r = col + 1; r < m; ++r)
        if (std::fabs(A[r * m + col]) > std::fabs(A[piv * m + col])) piv = r;
      if (piv != col) {
        for (std::size_t c = 0; c < m; ++c) std::swap(A[col * m + c], A[piv * m + c]);
        std::swap(rhs[col], rhs[piv]);
      }
      double d = A[col * m + col];
      for (std::size_t r = col + 1; r < m; ++r) {
        double f = A[r * m + col] / d;
        for (std::size_t c = col; c < m; ++c) A[r * m + c] -= f * A[col * m + c];
        rhs[r] -= f * rhs[col];
      }
    }
    std::vector<double> step(m);
    for (std::size_t r = m; r-- > 0;) {
      double v = rhs[r];
      for (std::size_t c = r + 1; c < m; ++c) v -= A[r * m + c] * step[c];
      step[r] = v / A[r * m + r];
    }

    // Damped Newton: halve until the objective does not increase.
    double before = objective(w);
    double t = 1.0;
    std::vector<double> trial(m);
    for (int h = 0; h < 60; ++h) {
      for (std::size_t k = 0; k < m; ++k) trial[k] = w[k] - t * step[k];
      if (objective(trial) <= before) break;
      t *= 0.5;
    }
    for (std::size_t k = 0; k < m; ++k) w[k] -= t * step[k];
  }

  NewtonResult res;
  res.weights.assign(w.begin(), w.begin() + dim);
  res.bias = w[dim];
  res.loss = objective(w);
  return res;
}

// ---- graph helpers --------------------------------------------------------

// Connected components of an adjacency structure treated as undirected.
inline std::vector<int> components(const std::vector<std::vector<std::uint32_t>>& adj) {
  std::vector<int> comp(adj.size(), -1);
  std::vector<std::uint32_t> stack;
  int c = 0;
  for (std::uint32_t s = 0; s < adj.size(); ++s) {
    if (comp[s] != -1) continue;
    stack.assign(1, s);
    comp[s] = c;
    while (!stack.empty()) {
      std::uint32_t v = stack.back();
      stack.pop_back();
      for (std::uint32_t u : adj[v])
        if (comp[u] == -1) {
          comp[u] = c;
          stack.push_back(u);
        }
    }
    ++c;
  }
  return comp;
}

// Hop distance from `from` to every node (undirected BFS), -1 if unreachable.
inline std::vector<int> hop_distances(const std::vector<std::vector<std::uint32_t>>& adj,
                                      std::uint32_t from) {
  std::vector<int> dist(adj.size(), -1);
  std::vector<std::uint32_t> queue{from};
  dist[from] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    std::uint32_t v = queue[head];
    for (std::uint32_t u : adj[v])
      if (dist[u] == -1) {
        dist[u] = dist[v] + 1;
        queue.push_back(u);
      }
  }
  return dist;
}

// ---- small numeric helpers ------------------------------------------------

inline double mean_of(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double cosine(std::span<const float> a, std::span<const float> b) {
  double num = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    num += static_cast<double>(a[k]) * b[k];
    na += static_cast<double>(a[k]) * a[k];
    nb += static_cast<double>(b[k]) * b[k];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return num / (std::sqrt(na) * std::sqrt(nb));
}

// ---- finite differences over store parameters -----------------------------

// Central finite difference of `loss` with respect to every entry of every
// matrix in the store, compared against `analytic` (same indexing: matrix 0
// is the target matrix, 1+s is aspect matrix s). Returns the worst relative
// error, where the scale guard max(1, |ga|, |gfd|) keeps near-zero gradients
// from inflating the ratio.
struct FdReport {
  double worst_rel = 0.0;
  std::size_t checked = 0;
};

inline FdReport fd_check(facetvec::EmbeddingStore& store,
                         const std::function<double()>& loss,
                         const std::function<double(std::uint32_t, std::uint32_t, std::uint32_t)>&
                             analytic,  // (matrix, node, component)
                         double h = 1e-3) {
  FdReport rep;
  auto probe = [&](float& x, double ga) {
    float keep = x;
    x = static_cast<float>(static_cast<double>(keep) + h);
    double xu = static_cast<double>(x);
    double up = loss();
    x = static_cast<float>(static_cast<double>(keep) - h);
    double xd = static_cast<double>(x);
    double down = loss();
    x = keep;
    // Divide by the step float32 actually realized, not the nominal 2h.
    double gfd = (up - down) / (xu - xd);
    double rel = std::fabs(ga - gfd) / std::max({1.0, std::fabs(ga), std::fabs(gfd)});
    rep.worst_rel = std::max(rep.worst_rel, rel);
    ++rep.checked;
  };
  for (std::uint32_t i = 0; i < store.nodes; ++i)
    for (std::uint32_t k = 0; k < store.dim; ++k)
      probe(store.target[static_cast<std::size_t>(i) * store.dim + k], analytic(0, i, k));
  for (std::uint32_t s = 0; s < store.aspects; ++s)
    for (std::uint32_t i = 0; i < store.nodes; ++i)
      for (std::uint32_t k = 0; k < store.dim; ++k)
        probe(store.aspect_context[(static_cast<std::size_t>(s) * store.nodes + i) * store.dim + k],
              analytic(1 + s, i, k));
  return rep;
}

}  // namespace oracle
