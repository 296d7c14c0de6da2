#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "focalkit/augment.hpp"
#include "focalkit/focal_net/model.hpp"
#include "focalkit/focal_net/trainer.hpp"
#include "focalkit/metrics.hpp"
#include "focalkit/synth.hpp"

namespace focalkit::experiment {

// Train at one focal, test at others: the toy model with and without the
// focal pathway, on synthetic textured-plane scenes.
struct ExperimentConfig {
  synth::SceneConfig scene;
  double f0 = 52.0;  // px; about a 63 degree horizontal field of view at 64 px
  std::size_t train_scenes = 1000;
  std::size_t test_scenes = 40;
  bool keep_original = true;
  MixPolicy policy;
  KRange k_range;
  std::vector<double> test_factors{0.75, 1.3, 1.0};
  net::ModelConfig model;
  net::TrainerConfig trainer;
  LossConfig loss;
  std::vector<std::uint64_t> seeds{1, 2, 3};

  ExperimentConfig();
};

struct ArmResult {
  bool with_focal = false;
  std::uint64_t seed = 0;
  std::vector<double> rmse;  // one per test factor
  std::vector<double> losses;
  net::ParamMap params;
};

struct ExperimentResult {
  std::vector<double> factors;
  std::vector<ArmResult> arms;

  // Seed-averaged RMSE for one arm at test factor index i.
  double mean_rmse(bool with_focal, std::size_t i) const;
  // 1 - with / ablated for test factor index i.
  double relative_improvement(std::size_t i) const;
};

// Augmented training set from scenes rendered at f0.
std::vector<RgbdSample> training_set(const ExperimentConfig& cfg, std::uint64_t seed);
// Held-out scenes rendered at factor * f0.
std::vector<RgbdSample> test_set(const ExperimentConfig& cfg, std::uint64_t seed, double factor);

// Pooled RMSE of the model over a sample set.
double pooled_rmse(const net::ParamMap& params, const net::ModelConfig& model, const std::vector<RgbdSample>& samples);

using Progress = std::function<void(const std::string&)>;

ArmResult run_arm(const ExperimentConfig& cfg, std::uint64_t seed, bool with_focal,
                  const std::vector<RgbdSample>& train, const std::vector<std::vector<RgbdSample>>& tests);

ExperimentResult run(const ExperimentConfig& cfg, const Progress& progress = {});

// Mean predicted depth of the model over `samples` when their focal is
// replaced by factor * fx; used to probe sensitivity to f.
double mean_prediction(const net::ParamMap& params, const net::ModelConfig& model,
                       const std::vector<RgbdSample>& samples, double factor);

}  // namespace focalkit::experiment
