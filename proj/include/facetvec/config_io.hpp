#pragma once

#include <string>

#include "facetvec/trainer.hpp"

namespace facetvec {

// JSON document mirroring TrainerConfig one key per field (short math-style
// names for the core hyperparameters: "d", "K", "window", "negatives",
// "tau", "lambda", "epsilon", "lr", ...). Unknown keys are rejected so a
// typo cannot silently fall back to a default.
std::string config_to_json(const TrainerConfig& cfg);
TrainerConfig config_from_json(const std::string& text);
TrainerConfig load_config_file(const std::string& path);
void save_config_file(const TrainerConfig& cfg, const std::string& path);

}  // namespace facetvec
