#include "facetvec/config_io.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace facetvec {

namespace {

const char* selection_name(AspectSelection s) {
  return s == AspectSelection::gumbel ? "gumbel" : "softmax";
}

AspectSelection parse_selection(const std::string& s) {
  if (s == "gumbel") return AspectSelection::gumbel;
  if (s == "softmax") return AspectSelection::softmax;
  throw std::invalid_argument("config: selection must be \"gumbel\" or \"softmax\", got \"" + s +
                              "\"");
}

}  // namespace

std::string config_to_json(const TrainerConfig& cfg) {
  nlohmann::ordered_json j;
  j["d"] = cfg.dim;
  j["K"] = cfg.aspects;
  j["window"] = cfg.window;
  j["negatives"] = cfg.negatives;
  j["tau"] = cfg.tau;
  j["lambda"] = cfg.lambda;
  j["epsilon"] = cfg.epsilon;
  j["lr"] = cfg.lr;
  j["lr_floor"] = cfg.lr_floor;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["seed"] = cfg.seed;
  j["warmup"] = cfg.warmup;
  j["reg_enabled"] = cfg.reg_enabled;
  j["hard_sample"] = cfg.hard_sample;
  j["selection"] = selection_name(cfg.selection);
  j["walks_per_node"] = cfg.walks_per_node;
  j["walk_length"] = cfg.walk_length;
  j["threads"] = cfg.threads;
  j["deterministic"] = cfg.deterministic;
  j["full_reg_scope"] = cfg.full_reg_scope;
  j["init_scale"] = cfg.init_scale;
  return j.dump(2);
}

TrainerConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be a JSON object");

  TrainerConfig cfg;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    try {
      if (key == "d") cfg.dim = it.value().get<std::uint32_t>();
      else if (key == "K") cfg.aspects = it.value().get<std::uint32_t>();
      else if (key == "window") cfg.window = it.value().get<std::uint32_t>();
      else if (key == "negatives") cfg.negatives = it.value().get<std::uint32_t>();
      else if (key == "tau") cfg.tau = it.value().get<double>();
      else if (key == "lambda") cfg.lambda = it.value().get<double>();
      else if (key == "epsilon") cfg.epsilon = it.value().get<double>();
      else if (key == "lr") cfg.lr = it.value().get<double>();
      else if (key == "lr_floor") cfg.lr_floor = it.value().get<double>();
      else if (key == "epochs") cfg.epochs = it.value().get<std::uint32_t>();
      else if (key == "batch_size") cfg.batch_size = it.value().get<std::uint32_t>();
      else if (key == "seed") cfg.seed = it.value().get<std::uint64_t>();
      else if (key == "warmup") cfg.warmup = it.value().get<bool>();
      else if (key == "reg_enabled") cfg.reg_enabled = it.value().get<bool>();
      else if (key == "hard_sample") cfg.hard_sample = it.value().get<bool>();
      else if (key == "selection") cfg.selection = parse_selection(it.value().get<std::string>());
      else if (key == "walks_per_node") cfg.walks_per_node = it.value().get<std::uint32_t>();
      else if (key == "walk_length") cfg.walk_length = it.value().get<std::uint32_t>();
      else if (key == "threads") cfg.threads = it.value().get<std::uint32_t>();
      else if (key == "deterministic") cfg.deterministic = it.value().get<bool>();
      else if (key == "full_reg_scope") cfg.full_reg_scope = it.value().get<bool>();
      else if (key == "init_scale") cfg.init_scale = it.value().get<double>();
      else throw std::invalid_argument("config: unknown key \"" + key + "\"");
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument("config: bad value for \"" + key + "\": " + e.what());
    }
  }
  return cfg;
}

TrainerConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return config_from_json(text);
}

void save_config_file(const TrainerConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file: " + path);
  out << config_to_json(cfg) << '\n';
}

}  // namespace facetvec
