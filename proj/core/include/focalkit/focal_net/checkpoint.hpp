#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "focalkit/focal_net/model.hpp"
#include "focalkit/focal_net/trainer.hpp"

namespace focalkit::net {

inline constexpr const char* kCheckpointFormat = "focalkit-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig model;
  ParamMap params;
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();  // free-form run metadata
};

nlohmann::ordered_json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json trainer_config_to_json(const TrainerConfig& cfg);

// JSON tensor dump: {"format", "version", "model", "extra", "tensors": {name: {"shape", "data"}}}.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
// Throws IoError on a missing file, wrong format tag or unsupported version.
Checkpoint load_checkpoint(const std::filesystem::path& path);

// "step,loss" header followed by one row per step.
void write_loss_curve(const std::vector<double>& losses, const std::filesystem::path& path);
std::vector<double> read_loss_curve(const std::filesystem::path& path);

}  // namespace focalkit::net
