// facetvec command-line driver: walk / train / het-train / eval / diag /
// export. Orchestration only; all numerics live in the library. Logs go to
// stderr, artifacts to disk, and exit codes distinguish bad configuration (2)
// from runtime failure (1).

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "facetvec/config_io.hpp"
#include "facetvec/eval.hpp"
#include "facetvec/graph.hpp"
#include "facetvec/hetnet.hpp"
#include "facetvec/store.hpp"
#include "facetvec/trainer.hpp"
#include "facetvec/walks.hpp"

namespace fs = std::filesystem;
using namespace facetvec;

namespace {

void require_file(const std::string& path, const char* what) {
  if (!fs::exists(path))
    throw std::invalid_argument(std::string(what) + " not found: " + path);
}

// One-line form of the resolved config, embedded in artifact headers.
std::string compact_config(const TrainerConfig& cfg) {
  return nlohmann::json::parse(config_to_json(cfg)).dump();
}

struct GraphOpts {
  std::string graph;
  std::string types;
  bool directed = false;
};

Graph load_graph(const GraphOpts& o) {
  require_file(o.graph, "graph edge list");
  Graph g = load_edge_list_file(o.graph, o.directed);
  if (!o.types.empty()) {
    require_file(o.types, "node type file");
    load_node_types_file(g, o.types);
  }
  std::cerr << "facetvec: graph: " << g.node_count() << " nodes, " << g.edge_count() << " edges ("
            << (o.directed ? "directed" : "undirected") << (g.typed() ? ", typed" : "") << ")\n";
  return g;
}

std::vector<TypeId> parse_type_list(const std::string& csv, const Graph& g) {
  std::vector<TypeId> out;
  std::stringstream ss(csv);
  std::string tag;
  while (std::getline(ss, tag, ',')) {
    auto b = tag.find_first_not_of(" \t");
    auto e = tag.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    tag = tag.substr(b, e - b + 1);
    try {
      out.push_back(g.type_id(tag));
    } catch (const std::exception& ex) {
      throw std::invalid_argument(ex.what());
    }
  }
  if (out.empty()) throw std::invalid_argument("empty node type list: '" + csv + "'");
  return out;
}

// If a cache path is given: load it when present, else build and save it.
// Returns nullptr (train generates its own corpus) when no path was given.
const WalkCorpus* cached_corpus(const std::string& path, const Graph& g, const TrainerConfig& cfg,
                                std::span<const Metapath> schemes, WalkCorpus& local) {
  if (path.empty()) return nullptr;
  if (fs::exists(path)) {
    local = load_corpus_file(path, g.structure_hash());
    std::cerr << "facetvec: corpus: loaded " << local.walks.size() << " walks from " << path
              << "\n";
  } else {
    local = schemes.empty()
                ? generate_walks(g, cfg.walks_per_node, cfg.walk_length, cfg.seed)
                : metapath_walks(g, schemes, cfg.walks_per_node, cfg.walk_length, cfg.seed);
    save_corpus_file(local, path);
    std::cerr << "facetvec: corpus: generated " << local.walks.size() << " walks, cached to "
              << path << "\n";
  }
  return &local;
}

// Standard model directory layout: fused embeddings, the target matrix, one
// file per aspect context matrix, the training log, and the resolved config.
void write_model_dir(const std::string& dir, const EmbeddingStore& store,
                     const std::vector<std::string>& names, TrainerConfig cfg,
                     const TrainLog* log) {
  fs::create_directories(dir);
  cfg.aspects = store.aspects;  // resolved: the baseline trainer runs one aspect
  cfg.dim = store.dim;
  save_config_file(cfg, dir + "/config.json");
  export_word2vec_file(dir + "/embeddings.txt", store.fused.data(), store.nodes, store.dim, names);
  export_word2vec_file(dir + "/target.txt", store.target.data(), store.nodes, store.dim, names);
  for (std::uint32_t a = 0; a < store.aspects; ++a)
    export_word2vec_file(dir + "/aspect_" + std::to_string(a) + ".txt",
                         store.aspect_context.data() +
                             static_cast<std::size_t>(a) * store.nodes * store.dim,
                         store.nodes, store.dim, names);
  if (log) {
    std::ofstream out(dir + "/training_log.csv");
    if (!out) throw std::runtime_error("cannot write " + dir + "/training_log.csv");
    out << "# config " << compact_config(cfg) << '\n';
    log->write_csv(out);
  }
  std::cerr << "facetvec: model written to " << dir << " (" << store.nodes << " x " << store.dim
            << ", " << store.aspects << " aspect matrices)\n";
}

// Rebuilds a parameter store from a model directory written by train.
EmbeddingStore load_model_dir(const std::string& dir, const TrainerConfig& cfg,
                              std::vector<std::string>* names_out) {
  require_file(dir + "/target.txt", "model target matrix");
  NamedMatrix t = import_word2vec_file(dir + "/target.txt");
  if (t.dim != cfg.dim)
    throw std::runtime_error("model dim " + std::to_string(t.dim) + " does not match config d=" +
                             std::to_string(cfg.dim));
  EmbeddingStore s;
  s.nodes = t.rows;
  s.dim = t.dim;
  s.aspects = cfg.aspects;
  s.target = std::move(t.values);
  s.aspect_context.resize(static_cast<std::size_t>(cfg.aspects) * s.nodes * s.dim);
  for (std::uint32_t a = 0; a < cfg.aspects; ++a) {
    std::string path = dir + "/aspect_" + std::to_string(a) + ".txt";
    require_file(path, "model aspect matrix");
    NamedMatrix q = import_word2vec_file(path);
    if (q.rows != s.nodes || q.dim != s.dim)
      throw std::runtime_error("model matrices disagree on shape: " + path);
    std::copy(q.values.begin(), q.values.end(),
              s.aspect_context.begin() + static_cast<std::size_t>(a) * s.nodes * s.dim);
  }
  if (names_out) *names_out = std::move(t.names);
  return s;
}

struct WalkOpts {
  GraphOpts g;
  std::vector<std::string> metapaths;
  std::string output;
};

struct TrainOpts {
  GraphOpts g;
  std::string corpus;
  std::string out;
  bool deepwalk = false;
};

struct HetOpts {
  GraphOpts g;
  std::vector<std::string> metapaths;
  std::string aspect_context_types;
  std::string single_aspect_types;
  std::string corpus;
  std::string out;
};

struct EvalOpts {
  GraphOpts g;
  std::string out;
  std::string op_name = "hadamard";
  std::uint64_t eval_seed = 1;
  double l2 = 1e-4;
  bool deepwalk = false;
  bool untrained = false;
};

struct DiagOpts {
  std::string model;
  std::string out;
  GraphOpts g;
  std::string corpus;
  bool heatmap = false;
  bool variance = false;
};

struct ExportOpts {
  std::string model;
  std::string matrix = "fused";
  std::string output;
};

int run_walk(const WalkOpts& o, const TrainerConfig& cfg) {
  if (!o.metapaths.empty() && o.g.types.empty())
    throw std::invalid_argument("--metapath requires --types");
  Graph g = load_graph(o.g);
  WalkCorpus corpus;
  if (o.metapaths.empty()) {
    corpus = generate_walks(g, cfg.walks_per_node, cfg.walk_length, cfg.seed);
  } else {
    std::vector<Metapath> schemes;
    for (const auto& m : o.metapaths) schemes.push_back(Metapath::parse(m, g));
    corpus = metapath_walks(g, schemes, cfg.walks_per_node, cfg.walk_length, cfg.seed);
  }
  save_corpus_file(corpus, o.output);
  std::cerr << "facetvec: wrote " << corpus.walks.size() << " walks ("
            << corpus.window_positions() << " window positions) to " << o.output << "\n";
  return 0;
}

int run_train(const TrainOpts& o, const TrainerConfig& cfg) {
  Graph g = load_graph(o.g);
  WalkCorpus local;
  const WalkCorpus* corpus = cached_corpus(o.corpus, g, cfg, {}, local);
  TrainLog log;
  EmbeddingStore store =
      o.deepwalk ? train_deepwalk(g, cfg, corpus, &log) : train(g, cfg, corpus, &log);
  if (!log.records.empty())
    std::cerr << "facetvec: final epoch mean loss " << log.records.back().mean_loss << "\n";
  write_model_dir(o.out, store, g.node_names, cfg, &log);
  return 0;
}

int run_het(const HetOpts& o, const TrainerConfig& cfg) {
  if (o.g.types.empty()) throw std::invalid_argument("het-train requires --types");
  Graph g = load_graph(o.g);
  std::vector<Metapath> schemes;
  for (const auto& m : o.metapaths) schemes.push_back(Metapath::parse(m, g));
  if (schemes.empty() && (o.corpus.empty() || !fs::exists(o.corpus)))
    throw std::invalid_argument("het-train needs --metapath or an existing --corpus cache");

  auto act = parse_type_list(o.aspect_context_types, g);
  std::vector<TypeId> sat;
  if (!o.single_aspect_types.empty()) sat = parse_type_list(o.single_aspect_types, g);

  WalkCorpus local;
  const WalkCorpus* corpus = cached_corpus(o.corpus, g, cfg, schemes, local);
  TrainLog log;
  EmbeddingStore store = train_het(g, cfg, act, sat, corpus, &log, schemes);
  if (log.context_filter_fallbacks > 0)
    std::cerr << "facetvec: " << log.context_filter_fallbacks
              << " windows fell back to the unfiltered context\n";
  write_model_dir(o.out, store, g.node_names, cfg, &log);
  return 0;
}

int run_eval(const EvalOpts& o, const TrainerConfig& cfg) {
  EdgeOp op = parse_edge_op(o.op_name);
  Graph g = load_graph(o.g);
  fs::create_directories(o.out);

  EdgeSplit split = split_edges(g, o.eval_seed);
  if (!split.warning.empty()) std::cerr << "facetvec: warning: " << split.warning << "\n";
  std::cerr << "facetvec: split: " << split.test_pos.size() << " test edges held out of "
            << g.edge_count() << "\n";
  std::vector<std::string> meta{"config " + compact_config(cfg),
                                "operator " + edge_op_name(op)};
  write_split_files(split, g, o.out + "/split_", meta);

  TrainLog log;
  EmbeddingStore store;
  if (o.untrained) {
    store = init_random(g.node_count(), cfg.dim, cfg.aspects, cfg.seed, cfg.init_scale);
    finalize(store);
    std::cerr << "facetvec: scoring with an untrained random store\n";
  } else if (o.deepwalk) {
    store = train_deepwalk(split.residual, cfg, nullptr, &log);
  } else {
    store = train(split.residual, cfg, nullptr, &log);
  }
  write_model_dir(o.out, store, g.node_names, cfg, o.untrained ? nullptr : &log);

  EvalReport rep = evaluate(store.fused.data(), store.dim, split, op, o.l2);
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(rep.to_json());
  j["config"] = nlohmann::ordered_json::parse(config_to_json(cfg));
  std::ofstream out(o.out + "/eval_report.json");
  if (!out) throw std::runtime_error("cannot write " + o.out + "/eval_report.json");
  out << j.dump(2) << '\n';
  std::cout << j.dump(2) << '\n';
  std::cerr << "facetvec: AUC " << rep.auc << " (" << edge_op_name(op) << ", "
            << rep.test_pos + rep.test_neg << " test pairs)\n";
  return 0;
}

int run_diag(const DiagOpts& o) {
  require_file(o.model + "/config.json", "model config");
  TrainerConfig cfg = load_config_file(o.model + "/config.json");
  std::vector<std::string> names;
  EmbeddingStore store = load_model_dir(o.model, cfg, &names);
  std::string outdir = o.out.empty() ? o.model : o.out;
  fs::create_directories(outdir);

  bool both = !o.heatmap && !o.variance;
  if (o.heatmap || both) {
    if (store.aspects >= 2) {
      auto h = aspect_heatmap(store);
      std::ofstream out(outdir + "/heatmap.csv");
      if (!out) throw std::runtime_error("cannot write " + outdir + "/heatmap.csv");
      out << "# config " << compact_config(cfg) << '\n';
      out << "aspect";
      for (std::uint32_t j = 0; j < store.aspects; ++j) out << ',' << j;
      out << '\n';
      for (std::uint32_t i = 0; i < store.aspects; ++i) {
        out << i;
        for (std::uint32_t j = 0; j < store.aspects; ++j)
          out << ',' << h[static_cast<std::size_t>(i) * store.aspects + j];
        out << '\n';
      }
      std::cerr << "facetvec: heatmap mean off-diagonal |cos| "
                << heatmap_off_diagonal_mean(h, store.aspects) << ", wrote " << outdir
                << "/heatmap.csv\n";
    } else if (o.heatmap) {
      throw std::invalid_argument("heatmap needs a model with at least two aspects");
    } else {
      std::cerr << "facetvec: single-aspect model, skipping heatmap\n";
    }
  }

  if (o.variance || (both && !o.g.graph.empty())) {
    if (o.g.graph.empty()) throw std::invalid_argument("--variance requires --graph");
    Graph g = load_graph(o.g);
    if (g.node_count() != store.nodes)
      throw std::runtime_error("graph node count does not match the model");
    WalkCorpus local;
    const WalkCorpus* corpus = cached_corpus(o.corpus, g, cfg, {}, local);
    if (!corpus) {
      local = generate_walks(g, cfg.walks_per_node, cfg.walk_length, cfg.seed);
      corpus = &local;
    }
    auto stats = aspect_distribution_stats(store, *corpus, cfg);
    std::ofstream out(outdir + "/variance_table.csv");
    if (!out) throw std::runtime_error("cannot write " + outdir + "/variance_table.csv");
    out << "# config " << compact_config(cfg) << '\n';
    out << "node,frequency,variance\n";
    for (std::uint32_t i = 0; i < store.nodes; ++i)
      out << names[i] << ',' << stats[i].frequency << ',' << stats[i].variance << '\n';
    std::cerr << "facetvec: wrote " << outdir << "/variance_table.csv\n";
  }
  return 0;
}

int run_export(const ExportOpts& o) {
  require_file(o.model + "/config.json", "model config");
  TrainerConfig cfg = load_config_file(o.model + "/config.json");
  std::vector<std::string> names;
  EmbeddingStore store = load_model_dir(o.model, cfg, &names);

  const float* values = nullptr;
  if (o.matrix == "fused") {
    finalize(store);
    values = store.fused.data();
  } else if (o.matrix == "target") {
    values = store.target.data();
  } else if (o.matrix.rfind("aspect:", 0) == 0) {
    std::uint32_t a = 0;
    try {
      a = static_cast<std::uint32_t>(std::stoul(o.matrix.substr(7)));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad aspect index in --matrix " + o.matrix);
    }
    if (a >= store.aspects)
      throw std::invalid_argument("aspect index " + std::to_string(a) + " out of range (K=" +
                                  std::to_string(store.aspects) + ")");
    values = store.aspect_context.data() + static_cast<std::size_t>(a) * store.nodes * store.dim;
  } else {
    throw std::invalid_argument("--matrix must be fused, target, or aspect:<index>");
  }
  export_word2vec_file(o.output, values, store.nodes, store.dim, names);
  std::cerr << "facetvec: exported " << o.matrix << " to " << o.output << "\n";
  return 0;
}

// Flags mirror the config-file keys one to one; a flag given on the command
// line overrides the value loaded from --config.
void add_config_flags(CLI::App* cmd, TrainerConfig& cfg, std::string& config_path) {
  cmd->add_option("--config", config_path, "JSON config file; explicit flags override it");
  cmd->add_option("--d", cfg.dim, "embedding width per aspect");
  cmd->add_option("--K", cfg.aspects, "number of aspects");
  cmd->add_option("--window", cfg.window, "context window half-width");
  cmd->add_option("--negatives", cfg.negatives, "negative samples per (target, context) pair");
  cmd->add_option("--tau", cfg.tau, "aspect selection temperature");
  cmd->add_option("--lambda", cfg.lambda, "aspect-overlap penalty weight");
  cmd->add_option("--epsilon", cfg.epsilon, "overlap mask threshold in [0,1]");
  cmd->add_option("--lr", cfg.lr, "initial learning rate");
  cmd->add_option("--lr_floor", cfg.lr_floor, "learning-rate floor");
  cmd->add_option("--epochs", cfg.epochs, "training epochs");
  cmd->add_option("--batch_size", cfg.batch_size, "windows per parameter update");
  cmd->add_option("--seed", cfg.seed, "master RNG seed");
  cmd->add_flag("--warmup,!--no-warmup", cfg.warmup, "initialize from a single-aspect pre-run");
  cmd->add_flag("--reg_enabled,!--no-reg_enabled", cfg.reg_enabled,
                "apply the aspect-overlap penalty");
  cmd->add_flag("--hard_sample,!--no-hard_sample", cfg.hard_sample,
                "one-hot aspect choice on the forward pass");
  cmd->add_option("--selection", cfg.selection, "aspect mixture: gumbel or softmax")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, AspectSelection>{{"gumbel", AspectSelection::gumbel},
                                                 {"softmax", AspectSelection::softmax}},
          CLI::ignore_case));
  cmd->add_option("--walks_per_node", cfg.walks_per_node, "random walks started per node");
  cmd->add_option("--walk_length", cfg.walk_length, "maximum walk length");
  cmd->add_option("--threads", cfg.threads, "worker threads (requires --no-deterministic)");
  cmd->add_flag("--deterministic,!--no-deterministic", cfg.deterministic,
                "single-threaded, bitwise-reproducible run");
  cmd->add_flag("--full_reg_scope,!--no-full_reg_scope", cfg.full_reg_scope,
                "penalize all nodes each batch, not only the touched ones");
  cmd->add_option("--init_scale", cfg.init_scale, "uniform init half-width (negative = 0.5/d)");
}

void add_graph_flags(CLI::App* cmd, GraphOpts& g, bool require_graph = true) {
  auto* opt = cmd->add_option("--graph", g.graph, "edge list file (two node names per line)");
  if (require_graph) opt->required();
  cmd->add_flag("--directed", g.directed, "treat edges as directed");
  cmd->add_option("--types", g.types, "node type file (node tag per line)");
}

// The config file must be applied before CLI11 writes flag values into the
// same struct, so it is pulled out of argv ahead of the real parse.
std::string find_config_arg(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  TrainerConfig cfg;
  try {
    std::string cfg_path = find_config_arg(argc, argv);
    if (!cfg_path.empty()) {
      require_file(cfg_path, "config file");
      cfg = load_config_file(cfg_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "facetvec: " << e.what() << '\n';
    return 2;
  }

  CLI::App app{"multi-aspect graph embeddings: random-walk skip-gram training with "
               "context-dependent aspect selection, plus evaluation and diagnostics"};
  app.require_subcommand(1);
  std::string config_path;

  WalkOpts wo;
  auto* walk_cmd = app.add_subcommand("walk", "generate and cache a random-walk corpus");
  add_graph_flags(walk_cmd, wo.g);
  walk_cmd->add_option("--metapath", wo.metapaths,
                       "cyclic node-type scheme like A,P,A (repeatable; needs --types)");
  walk_cmd->add_option("--output", wo.output, "corpus file to write")->required();
  add_config_flags(walk_cmd, cfg, config_path);

  TrainOpts to;
  auto* train_cmd = app.add_subcommand("train", "train aspect embeddings on a graph");
  add_graph_flags(train_cmd, to.g);
  train_cmd->add_option("--corpus", to.corpus, "walk corpus cache (loaded if present, else written)");
  train_cmd->add_option("--out", to.out, "model output directory")->required();
  train_cmd->add_flag("--deepwalk", to.deepwalk, "single-matrix skip-gram baseline (one aspect)");
  add_config_flags(train_cmd, cfg, config_path);

  HetOpts ho;
  auto* het_cmd = app.add_subcommand("het-train", "train on a typed graph with metapath walks");
  add_graph_flags(het_cmd, ho.g);
  het_cmd->add_option("--metapath", ho.metapaths, "cyclic node-type scheme like A,P,A (repeatable)");
  het_cmd->add_option("--aspect_context_types", ho.aspect_context_types,
                      "comma-separated types used for aspect selection")
      ->required();
  het_cmd->add_option("--single_aspect_types", ho.single_aspect_types,
                      "comma-separated types trained without an aspect mixture");
  het_cmd->add_option("--corpus", ho.corpus, "walk corpus cache (loaded if present, else written)");
  het_cmd->add_option("--out", ho.out, "model output directory")->required();
  add_config_flags(het_cmd, cfg, config_path);

  EvalOpts eo;
  auto* eval_cmd = app.add_subcommand("eval", "link-prediction evaluation: split, train, score");
  add_graph_flags(eval_cmd, eo.g);
  eval_cmd->add_option("--out", eo.out, "output directory for split, model, and report")
      ->required();
  eval_cmd->add_option("--operator", eo.op_name, "edge features: hadamard, average, l1, or l2");
  eval_cmd->add_option("--eval_seed", eo.eval_seed, "edge split / negative sampling seed");
  eval_cmd->add_option("--l2", eo.l2, "classifier ridge strength");
  eval_cmd->add_flag("--deepwalk", eo.deepwalk, "single-matrix skip-gram baseline (one aspect)");
  eval_cmd->add_flag("--untrained", eo.untrained, "score a random untrained store (sanity check)");
  add_config_flags(eval_cmd, cfg, config_path);

  DiagOpts diag;
  auto* diag_cmd = app.add_subcommand("diag", "aspect diagnostics from a trained model directory");
  diag_cmd->add_option("--model", diag.model, "model directory written by train")->required();
  diag_cmd->add_option("--out", diag.out, "output directory (default: the model directory)");
  add_graph_flags(diag_cmd, diag.g, /*require_graph=*/false);
  diag_cmd->add_option("--corpus", diag.corpus, "walk corpus cache for the usage table");
  diag_cmd->add_flag("--heatmap", diag.heatmap, "write the aspect cosine matrix only");
  diag_cmd->add_flag("--variance", diag.variance, "write the per-node usage table only");

  ExportOpts ex;
  auto* export_cmd = app.add_subcommand("export", "re-emit one matrix of a trained model");
  export_cmd->add_option("--model", ex.model, "model directory written by train")->required();
  export_cmd->add_option("--matrix", ex.matrix, "fused, target, or aspect:<index>");
  export_cmd->add_option("--output", ex.output, "embedding file to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(walk_cmd)) return run_walk(wo, cfg);
    if (app.got_subcommand(train_cmd)) return run_train(to, cfg);
    if (app.got_subcommand(het_cmd)) return run_het(ho, cfg);
    if (app.got_subcommand(eval_cmd)) return run_eval(eo, cfg);
    if (app.got_subcommand(diag_cmd)) return run_diag(diag);
    if (app.got_subcommand(export_cmd)) return run_export(ex);
  } catch (const std::invalid_argument& e) {
    std::cerr << "facetvec: invalid configuration: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "facetvec: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
