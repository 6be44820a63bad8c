#pragma once

// Shared epoch loop for every trainer variant. The window processors plug in
// here; the engine owns shuffling, batching, the learning-rate schedule, the
// per-batch penalty, divergence checks, and logging. Keeping one loop is what
// makes the single-aspect and aspect-mixture runs comparable step for step.

#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "facetvec/rng.hpp"
#include "facetvec/trainer.hpp"
#include "facetvec/walks.hpp"

namespace facetvec::detail {

// O(1) discrete sampler over an id subset (alias method). Construction is
// deterministic in the input order; sampling consumes exactly one index draw
// and one uniform per call path through Rng.
class AliasTable {
 public:
  AliasTable() = default;

  AliasTable(std::vector<NodeId> ids, std::span<const double> weights) : ids_(std::move(ids)) {
    std::size_t n = ids_.size();
    if (n == 0 || weights.size() != n)
      throw std::invalid_argument("AliasTable: empty support or size mismatch");
    threshold_.assign(n, 1.0);
    alias_.assign(n, 0);

    double total = 0.0;
    for (double w : weights) {
      if (!(w > 0.0)) throw std::invalid_argument("AliasTable: weights must be positive");
      total += w;
    }
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i) scaled[i] = weights[i] * n / total;

    std::vector<std::uint32_t> small, large;
    for (std::size_t i = n; i-- > 0;)
      (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    while (!small.empty() && !large.empty()) {
      std::uint32_t s = small.back();
      small.pop_back();
      std::uint32_t l = large.back();
      threshold_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] -= 1.0 - scaled[s];
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    // Leftovers are 1.0 up to rounding.
    while (!large.empty()) {
      threshold_[large.back()] = 1.0;
      large.pop_back();
    }
    while (!small.empty()) {
      threshold_[small.back()] = 1.0;
      small.pop_back();
    }
  }

  NodeId sample(Rng& rng) const {
    std::size_t slot = static_cast<std::size_t>(rng.next_below(ids_.size()));
    return rng.next_double() < threshold_[slot] ? ids_[slot] : ids_[alias_[slot]];
  }

  bool valid() const { return !ids_.empty(); }
  std::size_t support() const { return ids_.size(); }

 private:
  std::vector<NodeId> ids_;
  std::vector<double> threshold_;
  std::vector<std::uint32_t> alias_;
};

// Occurrence count of every node over all walk positions.
inline std::vector<double> corpus_frequencies(const WalkCorpus& corpus, std::size_t node_count) {
  std::vector<double> freq(node_count, 0.0);
  for (const auto& w : corpus.walks)
    for (NodeId v : w) freq[v] += 1.0;
  return freq;
}

// Unigram-to-the-0.75 sampler over the ids with positive corpus frequency.
inline AliasTable noise_table(std::span<const double> freq, std::span<const NodeId> ids) {
  std::vector<NodeId> support;
  std::vector<double> weights;
  support.reserve(ids.size());
  weights.reserve(ids.size());
  for (NodeId v : ids) {
    if (freq[v] > 0.0) {
      support.push_back(v);
      weights.push_back(std::pow(freq[v], 0.75));
    }
  }
  if (support.empty()) throw std::runtime_error("negative sampler: empty support");
  return AliasTable(std::move(support), weights);
}

inline void check_finite(const EmbeddingStore& s, std::uint32_t epoch) {
  auto scan = [epoch](const std::vector<float>& m, const char* name) {
    for (float x : m)
      if (!std::isfinite(x))
        throw std::runtime_error("training diverged: non-finite value in " + std::string(name) +
                                 " after epoch " + std::to_string(epoch));
  };
  scan(s.target, "target matrix");
  scan(s.aspect_context, "aspect context matrices");
}

// Processor contract:
//   double process(EmbeddingStore&, std::uint32_t epoch, std::size_t walk_idx,
//                  std::size_t pos, NodeId target, std::span<const NodeId> ctx,
//                  GradBuffer&);
// returning the window loss with gradients accumulated into the buffer.
template <class Processor>
void run_epochs(EmbeddingStore& store, const WalkCorpus& corpus, const TrainerConfig& cfg,
                Processor&& proc, TrainLog* log) {
  const std::uint64_t schedule_total =
      static_cast<std::uint64_t>(cfg.epochs) * corpus.window_positions();
  if (schedule_total == 0) throw std::runtime_error("training corpus emits no context windows");

  std::atomic<std::uint64_t> step{0};
  const bool use_reg = cfg.reg_enabled && store.aspects > 1;
  std::vector<NodeId> all_nodes;
  if (use_reg && cfg.full_reg_scope) {
    all_nodes.resize(store.nodes);
    std::iota(all_nodes.begin(), all_nodes.end(), 0);
  }

  auto lr_at = [&](std::uint64_t done) {
    double f = cfg.lr * (1.0 - static_cast<double>(done) / static_cast<double>(schedule_total));
    return f > cfg.lr_floor ? f : cfg.lr_floor;
  };

  std::vector<std::size_t> order(corpus.walks.size());
  std::mutex reduce_mu;

  for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_stream(cfg.seed, kStreamShuffle, epoch));
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    std::uint64_t epoch_windows = 0;
    double epoch_reg = 0.0;
    std::uint64_t epoch_batches = 0;
    std::size_t zero_norms = 0;
    std::exception_ptr worker_error;

    auto worker = [&](std::size_t first, std::size_t last, Processor& p) {
      GradBuffer grads(store.dim, store.aspects);
      double loss_sum = 0.0;
      std::uint64_t windows = 0;
      double reg_sum = 0.0;
      std::uint64_t batches = 0;
      std::size_t zn = 0;
      std::uint32_t in_batch = 0;

      auto flush = [&] {
        if (in_batch == 0) return;
        double lr_now = lr_at(step.load(std::memory_order_relaxed));
        if (use_reg) {
          GradBuffer reg_grads(store.dim, store.aspects);
          auto subset = cfg.full_reg_scope ? all_nodes : grads.touched_nodes();
          reg_sum += regularizer(store, cfg.epsilon, subset, &reg_grads, &zn);
          ++batches;
          grads.apply(store, lr_now);
          reg_grads.apply(store, lr_now * cfg.lambda);
        } else {
          grads.apply(store, lr_now);
        }
        grads.clear();
        in_batch = 0;
      };

      try {
        for (std::size_t oi = first; oi < last; ++oi) {
          std::size_t wi = order[oi];
          for_each_window_in(corpus, wi, wi + 1, cfg.window,
                             [&](std::size_t walk_idx, std::size_t pos, NodeId target,
                                 std::span<const NodeId> ctx) {
                               double loss =
                                   p.process(store, epoch, walk_idx, pos, target, ctx, grads);
                               if (!std::isfinite(loss))
                                 throw std::runtime_error(
                                     "training diverged: non-finite window loss at epoch " +
                                     std::to_string(epoch));
                               loss_sum += loss;
                               ++windows;
                               step.fetch_add(1, std::memory_order_relaxed);
                               if (++in_batch >= cfg.batch_size) flush();
                             });
        }
        flush();
      } catch (...) {
        std::lock_guard<std::mutex> lk(reduce_mu);
        if (!worker_error) worker_error = std::current_exception();
      }
      std::lock_guard<std::mutex> lk(reduce_mu);
      epoch_loss += loss_sum;
      epoch_windows += windows;
      epoch_reg += reg_sum;
      epoch_batches += batches;
      zero_norms += zn;
    };

    if (cfg.threads <= 1) {
      worker(0, order.size(), proc);
    } else {
      std::vector<std::remove_reference_t<Processor>> procs(cfg.threads, proc);
      std::vector<std::thread> pool;
      std::size_t chunk = (order.size() + cfg.threads - 1) / cfg.threads;
      for (std::uint32_t t = 0; t < cfg.threads; ++t) {
        std::size_t first = static_cast<std::size_t>(t) * chunk;
        std::size_t last = first + chunk < order.size() ? first + chunk : order.size();
        if (first >= last) break;
        pool.emplace_back(worker, first, last, std::ref(procs[t]));
      }
      for (auto& th : pool) th.join();
    }
    if (worker_error) std::rethrow_exception(worker_error);

    check_finite(store, epoch);
    if (log) {
      log->zero_norm_cosines += zero_norms;
      TrainLogRecord rec;
      rec.epoch = epoch;
      rec.step = step.load();
      rec.mean_loss = epoch_windows ? epoch_loss / static_cast<double>(epoch_windows) : 0.0;
      rec.mean_reg = epoch_batches ? epoch_reg / static_cast<double>(epoch_batches) : 0.0;
      log->records.push_back(rec);
    }
  }
}

}  // namespace facetvec::detail
