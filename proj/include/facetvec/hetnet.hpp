#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "facetvec/graph.hpp"
#include "facetvec/trainer.hpp"
#include "facetvec/walks.hpp"

namespace facetvec {

// Cyclic node-type scheme guiding walks, e.g. A,P,A. First and last type
// must match so the scheme can repeat; every consecutive type pair must
// admit at least one edge in the graph.
struct Metapath {
  std::vector<TypeId> scheme;

  // Parses a comma-separated type-tag list ("A,P,A") against the graph's
  // type table. Throws on unknown tags, length < 2, open schemes (first !=
  // last), or consecutive types with no edge between them.
  static Metapath parse(const std::string& csv, const Graph& g);
};

// r walks from every node of each scheme's start type; step m moves to a
// uniform out-neighbor of the type at position (m+1) in the cyclically
// repeated scheme, ending early when no neighbor matches. Walks are grouped
// scheme-major, then start node, then repeat. Graph must be typed.
WalkCorpus metapath_walks(const Graph& g, std::span<const Metapath> schemes,
                          std::uint32_t walks_per_node, std::uint32_t walk_length,
                          std::uint64_t seed);

// Heterogeneous training. Node types split into two groups: multi-aspect
// targets (the default for every type) learn the aspect mixture with
// selection computed from context nodes whose type is in
// aspect_context_types only (falling back to the full context, counted in
// log->context_filter_fallbacks, when a window has none); single-aspect
// target types learn plain skip-gram against mean-aspect context vectors.
// Negatives share the context node's type. The masked aspect penalty applies
// as in train(). The corpus must come from the same graph; if absent it is
// generated from `schemes`.
EmbeddingStore train_het(const Graph& g, const TrainerConfig& cfg,
                         std::span<const TypeId> aspect_context_types,
                         std::span<const TypeId> single_aspect_types,
                         const WalkCorpus* corpus = nullptr, TrainLog* log = nullptr,
                         std::span<const Metapath> schemes = {});

struct RankedCandidate {
  double score = 0.0;
  bool positive = false;
};

struct RankingQuery {
  std::vector<RankedCandidate> candidates;
};

struct RankingReport {
  std::vector<std::uint32_t> n_list;
  std::vector<double> recall;     // parallel to n_list, averaged over queries
  std::vector<double> precision;  // hits / N
  std::vector<double> f1;
  double auc = 0.0;               // mean per-query AUC, ties count 1/2
  std::size_t queries_used = 0;
  std::size_t queries_skipped = 0;  // no positive or no negative candidate
};

// Ranks each query's candidates by descending score (ties keep input order)
// and averages recall@N, precision@N, F1@N, and per-query AUC over the
// queries that have at least one positive and one negative.
RankingReport ranking_metrics(std::span<const RankingQuery> queries,
                              std::span<const std::uint32_t> n_list);

}  // namespace facetvec
